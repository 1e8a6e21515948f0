#include "session.hpp"

#include <algorithm>
#include <chrono>

#include "gold/error.hpp"

namespace gold {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<json> dialogue_records(std::span<const Dialogue> dialogues) {
  std::vector<json> out;
  out.reserve(dialogues.size());
  for (const auto& d : dialogues) out.push_back(to_json(d));
  return out;
}

std::vector<json> candidate_records(std::span<const Candidate> candidates) {
  std::vector<json> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(to_json(c));
  return out;
}

json split_counts(std::span<const Dialogue> split) {
  std::size_t ins = 0, oos = 0, pseudo = 0, unlabeled = 0;
  for (const auto& d : split) {
    if (d.label.is_ins()) ++ins;
    else if (d.label.is_oos() && d.label.pseudo) ++pseudo;
    else if (d.label.is_oos()) ++oos;
    else ++unlabeled;
  }
  return {{"total", split.size()}, {"ins", ins}, {"oos", oos}, {"pseudo_oos", pseudo}, {"unlabeled", unlabeled}};
}

}  // namespace

Session::Session(PipelineConfig cfg, fs::path dir, bool train_missing, unsigned threads)
    : cfg_(std::move(cfg)), dir_(std::move(dir)), train_missing_(train_missing), threads_(threads) {
  fs::create_directories(dir_);
}

ArtifactMeta Session::meta() const { return {cfg_.rng_seed, cfg_.digest()}; }

void Session::write_config() { write_json_artifact(path(artifact::kConfig), cfg_.to_json(), meta()); }

void Session::load_datasets_once() {
  if (datasets_loaded_) return;
  auto [target, source] = load_datasets(cfg_);
  target_ = std::move(target);
  source_ = std::move(source);
  datasets_loaded_ = true;
}

json Session::ingest() {
  load_datasets_once();
  json doc = {{"target", {{"train", split_counts(target_.train)},
                          {"dev", split_counts(target_.dev)},
                          {"test", split_counts(target_.test)}}},
              {"source", {{"dialogues", source_.size()}, {"files", cfg_.sources}}}};
  write_json_artifact(path(artifact::kIngest), doc, meta());
  return doc;
}

Workspace& Session::embeddings(bool owner) {
  if (embeddings_ready_) return ws_;
  load_datasets_once();
  const bool stored = fs::is_regular_file(path(artifact::kEmbeddings)) && fs::is_regular_file(path(artifact::kSeeds));
  if (stored && !owner) {
    const json doc = read_json_file(path(artifact::kEmbeddings));
    ws_.target = target_;
    ws_.source = source_;
    ws_.threads = threads_;
    ws_.features = Featurizer{Embedder::from_json(doc.at("features")),
                              dialogue_mode_from_string(doc.at("feature_mode").get<std::string>())};
    ws_.extractor = Embedder::from_json(doc.at("extractor"));
    ws_.seeds.examples = read_dialogues(path(artifact::kSeeds), DatasetRole::Target);
    ws_.seeds.budget = doc.at("seed_budget").get<std::size_t>();
  } else if (may_compute(owner)) {
    ws_ = prepare_workspace(cfg_, target_, source_, threads_);
    const json doc = {{"features", ws_.features.embedder.to_json()},
                      {"feature_mode", to_string(ws_.features.mode)},
                      {"feature_dim", ws_.features.dim()},
                      {"extractor", ws_.extractor.to_json()},
                      {"seed_budget", ws_.seeds.budget}};
    write_json_artifact(path(artifact::kEmbeddings), doc, meta());
    write_jsonl_artifact(path(artifact::kSeeds), dialogue_records(ws_.seeds.examples), meta());
  } else {
    throw Error(ErrorCode::MissingArtifact, artifact::kEmbeddings);
  }
  embeddings_ready_ = true;
  return ws_;
}

Workspace& Session::intent(bool owner) {
  if (ws_.intent) return ws_;
  embeddings(false);
  if (fs::is_regular_file(path(artifact::kIntent)) && !owner) {
    const json doc = read_json_file(path(artifact::kIntent));
    ws_.intent = SoftmaxClassifier::from_json(doc.at("model"));
    ws_.geometry = fit_geometry(*ws_.intent, ws_.ins_train(), ws_.features, threads_);
  } else if (may_compute(owner)) {
    train_supporting(ws_, cfg_);
    const json doc = {{"model", ws_.intent->to_json()}, {"report", ws_.intent_report.to_json()}};
    write_json_artifact(path(artifact::kIntent), doc, meta());
  } else {
    throw Error(ErrorCode::MissingArtifact, artifact::kIntent);
  }
  return ws_;
}

Workspace& Session::voters(bool owner) {
  if (ws_.ensemble) return ws_;
  intent(false);
  if (fs::is_regular_file(path(artifact::kVoters)) && !owner) {
    ws_.ensemble = EnsembleConfig::from_json(read_json_file(path(artifact::kVoters)).at("ensemble"));
  } else if (may_compute(owner)) {
    tune_ensemble(ws_, cfg_);
    write_json_artifact(path(artifact::kVoters),
                        {{"ensemble", ws_.ensemble->to_json()}, {"objective", to_string(cfg_.objective)}}, meta());
  } else {
    throw Error(ErrorCode::MissingArtifact, artifact::kVoters);
  }
  return ws_;
}

json Session::augment(std::vector<Dialogue>* training) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg_.election) {
    voters(false);
  } else {
    intent(false);
  }
  if (!ws_.index) build_source_index(ws_);
  const AugmentationRun run = run_augmentation(ws_, cfg_, cfg_.d);
  const TrainingSet data = aggregate(ws_.ins_train(), ws_.seeds, run);

  std::vector<Candidate> examined;
  for (const auto& s : run.seeds) examined.insert(examined.end(), s.examined.begin(), s.examined.end());
  write_jsonl_artifact(path(artifact::kCandidates), candidate_records(examined), meta());
  write_jsonl_artifact(path(artifact::kElected), candidate_records(run.aggregate), meta());
  write_jsonl_artifact(path(artifact::kAugmented), dialogue_records(data.records), meta());

  json manifest = run.manifest();
  manifest["training_set"] = data.counts();
  if (record_timing) {
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  write_json_artifact(path(artifact::kAugmentManifest), manifest, meta());
  if (training != nullptr) *training = data.records;
  return manifest;
}

std::vector<Dialogue> Session::training_set(bool owner) {
  if (fs::is_regular_file(path(artifact::kAugmented)) && !owner) {
    return read_dialogues(path(artifact::kAugmented), DatasetRole::Target);
  }
  if (!may_compute(owner)) throw Error(ErrorCode::MissingArtifact, artifact::kAugmented);
  std::vector<Dialogue> records;
  augment(&records);
  return records;
}

const BinaryDetector& Session::direct(bool owner) {
  if (direct_) return *direct_;
  embeddings(false);
  if (fs::is_regular_file(path(artifact::kDirect)) && !owner) {
    direct_ = BinaryDetector::from_json(read_json_file(path(artifact::kDirect)).at("model"));
  } else if (may_compute(owner)) {
    const auto records = training_set(false);
    TrainReport report;
    direct_ = train_direct(records, ws_.features, cfg_.direct_train, cfg_.direct, &report, threads_);
    write_json_artifact(path(artifact::kDirect),
                        {{"model", direct_->to_json()}, {"report", report.to_json()},
                         {"training_set", split_counts(records)}},
                        meta());
  } else {
    throw Error(ErrorCode::MissingArtifact, artifact::kDirect);
  }
  return *direct_;
}

const BinaryDetector& Session::oracle(bool owner) {
  if (oracle_) return *oracle_;
  embeddings(false);
  if (fs::is_regular_file(path(artifact::kOracle)) && !owner) {
    oracle_ = BinaryDetector::from_json(read_json_file(path(artifact::kOracle)).at("model"));
  } else if (may_compute(owner)) {
    TrainReport report;
    oracle_ = train_oracle(ws_.target, ws_.features, cfg_.direct_train, cfg_.direct, &report, threads_);
    write_json_artifact(path(artifact::kOracle), {{"model", oracle_->to_json()}, {"report", report.to_json()}},
                        meta());
  } else {
    throw Error(ErrorCode::MissingArtifact, artifact::kOracle);
  }
  return *oracle_;
}

EvalReport Session::evaluate(const std::string& method) {
  if (std::find(evaluation_methods().begin(), evaluation_methods().end(), method) == evaluation_methods().end()) {
    throw Error(ErrorCode::InvalidConfig, "unknown evaluation method '" + method + "'");
  }
  const BinaryDetector* model = nullptr;
  if (method == "direct") {
    model = &direct(false);
  } else if (method == "oracle") {
    model = &oracle(false);
  } else {
    intent(false);
    // Thresholds only affect the dumped votes, so untuned voters are allowed.
    if (!ws_.ensemble && (fs::is_regular_file(path(artifact::kVoters)) || train_missing_)) voters(false);
  }
  std::vector<ScoreRecord> dump;
  const auto scored = score_test_set(ws_, cfg_, method, model, &dump);
  EvalReport report = evaluate_scores(scored, method);
  std::vector<json> rows;
  rows.reserve(dump.size());
  for (const auto& r : dump) rows.push_back({{"id", r.id}, {"detector", r.detector}, {"score", r.score}, {"vote", r.vote}});
  write_jsonl_artifact(dir_ / ("scores_" + method + ".jsonl"), rows, meta());
  write_json_artifact(dir_ / ("eval_" + method + ".json"), report.to_json(), meta());
  return report;
}

EvalReport Session::evaluate_scores(std::span<const ScoredExample> scored, const std::string& method) const {
  return gold::evaluate(scored, {{"method", method}, {"config_digest", cfg_.digest()}, {"rng_seed", cfg_.rng_seed}});
}

json Session::sweep(const std::vector<std::size_t>& ds) {
  if (cfg_.election) {
    voters(false);
  } else {
    intent(false);
  }
  if (!ws_.index) build_source_index(ws_);
  json points = json::array();
  for (const std::size_t d : ds) {
    const AugmentationRun run = run_augmentation(ws_, cfg_, d);
    const BinaryDetector model = train_gold_detector(ws_, cfg_, run);
    EvalReport report = evaluate_scores(score_test_set(ws_, cfg_, "direct", &model), "direct");
    report.run["d"] = d;
    points.push_back({{"d", d}, {"elected", run.aggregate.size()}, {"shortfalls", run.shortfall_count()},
                      {"report", report.to_json()}});
  }
  json doc = {{"method", "direct"}, {"points", points}};
  write_json_artifact(path(artifact::kSweep), doc, meta());
  return doc;
}

}  // namespace gold
