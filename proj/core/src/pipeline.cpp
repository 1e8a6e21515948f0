#include "gold/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <limits>

#include "gold/error.hpp"
#include "gold/parallel.hpp"
#include "gold/text.hpp"

namespace gold {

using nlohmann::json;
namespace fs = std::filesystem;

PipelineConfig PipelineConfig::seeded(std::uint64_t seed) const {
  PipelineConfig c = *this;
  c.rng_seed = seed;
  c.intent_train.rng_seed = seed;
  c.direct_train.rng_seed = seed;
  c.detector_params.dropout_seed = seed;
  return c;
}

void PipelineConfig::validate() const {
  if (target.empty()) throw Error(ErrorCode::InvalidConfig, "no target dataset given");
  if (!fs::is_regular_file(target + ".train.jsonl") && !fs::is_regular_file(target)) {
    throw Error(ErrorCode::InvalidConfig, "target dataset not found: " + target);
  }
  if (sources.empty()) throw Error(ErrorCode::InvalidConfig, "no source dataset given");
  for (const auto& s : sources) {
    if (!fs::is_regular_file(s) && !fs::is_regular_file(s + ".train.jsonl")) {
      throw Error(ErrorCode::InvalidConfig, "source dataset not found: " + s);
    }
  }
  for (const auto* backend : {&extractor, &features}) {
    const auto kind = backend_from_string(*backend);
    if (kind == BackendKind::WordvecAvg && !fs::is_regular_file(wordvec_path)) {
      throw Error(ErrorCode::InvalidConfig, "word-vector file not found: '" + wordvec_path + "'");
    }
    if (kind == BackendKind::External && !fs::is_regular_file(external_path)) {
      throw Error(ErrorCode::InvalidConfig, "external vector store not found: '" + external_path + "'");
    }
  }
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) throw Error(ErrorCode::InvalidConfig, "seed_fraction in (0, 1]");
  if (cap_factor == 0) throw Error(ErrorCode::InvalidConfig, "cap_factor must be >= 1");
  if (max_features == 0) throw Error(ErrorCode::InvalidConfig, "max_features must be >= 1");
  EnsembleConfig{voters, {}, 0}.validate();
  intent_train.validate();
  direct_train.validate();
  for (const auto& m : methods) {
    if (std::find(evaluation_methods().begin(), evaluation_methods().end(), m) == evaluation_methods().end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown evaluation method '" + m + "'");
    }
  }
}

json PipelineConfig::to_json() const {
  json voter_names = json::array();
  for (const auto v : voters) voter_names.push_back(to_string(v));
  json j = {{"target", target},
            {"sources", sources},
            {"extractor", extractor},
            {"features", features},
            {"feature_mode", to_string(feature_mode)},
            {"max_features", max_features},
            {"wordvec_path", wordvec_path},
            {"external_path", external_path},
            {"random_dim", random_dim},
            {"l2_normalize", l2_normalize},
            {"seed_fraction", seed_fraction},
            {"d", d},
            {"m", m},
            {"cap_factor", cap_factor},
            {"strategy", to_string(strategy)},
            {"election", election},
            {"voters", std::move(voter_names)},
            {"objective", to_string(objective)},
            {"detector_params", detector_params.to_json()},
            {"intent_train", intent_train.to_json()},
            {"direct_train", direct_train.to_json()},
            {"pseudo_weight", direct.pseudo_weight},
            {"rng_seed", rng_seed},
            {"methods", methods},
            {"sweep", sweep}};
  j["class_weighting"] = direct.class_weighting ? json(*direct.class_weighting) : json(nullptr);
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) { return from_json(j, PipelineConfig{}); }

PipelineConfig PipelineConfig::from_json(const json& j, PipelineConfig c) {
  try {
    c.target = j.value("target", c.target);
    c.sources = j.value("sources", c.sources);
    c.extractor = j.value("extractor", c.extractor);
    c.features = j.value("features", c.features);
    if (j.contains("feature_mode")) c.feature_mode = dialogue_mode_from_string(j["feature_mode"].get<std::string>());
    c.max_features = j.value("max_features", c.max_features);
    c.wordvec_path = j.value("wordvec_path", c.wordvec_path);
    c.external_path = j.value("external_path", c.external_path);
    c.random_dim = j.value("random_dim", c.random_dim);
    c.l2_normalize = j.value("l2_normalize", c.l2_normalize);
    c.seed_fraction = j.value("seed_fraction", c.seed_fraction);
    c.d = j.value("d", c.d);
    c.m = j.value("m", c.m);
    c.cap_factor = j.value("cap_factor", c.cap_factor);
    if (j.contains("strategy")) c.strategy = swap_strategy_from_string(j["strategy"].get<std::string>());
    c.election = j.value("election", c.election);
    if (j.contains("voters")) {
      c.voters.clear();
      for (const auto& v : j["voters"]) c.voters.push_back(detector_from_string(v.get<std::string>()));
    }
    if (j.contains("objective")) c.objective = objective_from_string(j["objective"].get<std::string>());
    if (j.contains("detector_params")) c.detector_params = DetectorParams::from_json(j["detector_params"], c.detector_params);
    if (j.contains("intent_train")) c.intent_train = TrainConfig::from_json(j["intent_train"], c.intent_train);
    if (j.contains("direct_train")) c.direct_train = TrainConfig::from_json(j["direct_train"], c.direct_train);
    c.direct.pseudo_weight = j.value("pseudo_weight", c.direct.pseudo_weight);
    if (j.contains("class_weighting") && !j["class_weighting"].is_null()) {
      c.direct.class_weighting = j["class_weighting"].get<double>();
    }
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.methods = j.value("methods", c.methods);
    c.sweep = j.value("sweep", c.sweep);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

std::string PipelineConfig::digest() const { return hex64(fnv1a64(to_json().dump())); }

std::vector<Dialogue> Workspace::ins_train() const {
  std::vector<Dialogue> out;
  for (const auto& d : target.train) {
    if (d.label.is_ins()) out.push_back(d);
  }
  return out;
}

std::vector<Dialogue> Workspace::oos_pool() const {
  std::vector<Dialogue> out;
  for (const auto& d : target.train) {
    if (d.label.is_oos()) out.push_back(d);
  }
  return out;
}

DetectorSuite Workspace::detector_suite(const PipelineConfig& cfg) const {
  if (!intent || !geometry) throw Error(ErrorCode::MissingArtifact, "supporting model");
  return DetectorSuite(*intent, *geometry, cfg.detector_params);
}

std::pair<DatasetSplit, std::vector<Dialogue>> load_datasets(const PipelineConfig& cfg) {
  DatasetSplit target = ingest(cfg.target, DatasetRole::Target);
  std::vector<Dialogue> pool;
  for (const auto& path : cfg.sources) {
    DatasetSplit s = ingest(path, DatasetRole::Source);
    std::string stem = fs::path(path).filename().string();
    if (const auto dot = stem.find('.'); dot != std::string::npos) stem.resize(dot);
    for (auto* part : {&s.train, &s.dev, &s.test}) {
      for (auto& d : *part) {
        if (cfg.sources.size() > 1) d.id = stem + ":" + d.id;
        pool.push_back(std::move(d));
      }
    }
  }
  return {std::move(target), std::move(pool)};
}

Embedder make_backend(const std::string& name, const PipelineConfig& cfg, const std::vector<std::string>& corpus) {
  Embedder e;
  switch (backend_from_string(name)) {
    case BackendKind::Tfidf:
      e = Embedder::tfidf(std::make_shared<const Vocabulary>(fit_tfidf(corpus, cfg.max_features)));
      break;
    case BackendKind::WordvecAvg:
      e = Embedder::wordvec(std::make_shared<const WordVectorTable>(WordVectorTable::load(cfg.wordvec_path)),
                            cfg.wordvec_path);
      break;
    case BackendKind::External:
      e = Embedder::external(std::make_shared<const ExternalStore>(ExternalStore::load(cfg.external_path)),
                             cfg.external_path);
      break;
    case BackendKind::Random:
      e = Embedder::random(cfg.rng_seed, cfg.random_dim);
      break;
  }
  return e.with_l2_normalization(cfg.l2_normalize);
}

Workspace prepare_workspace(const PipelineConfig& cfg, DatasetSplit target, std::vector<Dialogue> source,
                            unsigned threads) {
  Workspace ws;
  ws.threads = threads;
  ws.target = std::move(target);
  ws.source = std::move(source);

  std::vector<std::string> corpus;
  for (const auto& d : ws.target.train) {
    for (const auto& t : d.turns) corpus.push_back(t.text);
  }
  for (const auto& d : ws.source) {
    for (const auto& t : d.turns) corpus.push_back(t.text);
  }
  const Embedder feature_backend = make_backend(cfg.features, cfg, corpus);
  ws.features = Featurizer{feature_backend, cfg.feature_mode};
  ws.extractor = cfg.extractor == cfg.features ? feature_backend : make_backend(cfg.extractor, cfg, corpus);

  const auto ins = ws.ins_train();
  const auto pool = ws.oos_pool();
  ws.seeds = sample_seed(pool, ins.size(), cfg.seed_fraction, cfg.rng_seed);
  return ws;
}

void train_supporting(Workspace& ws, const PipelineConfig& cfg) {
  const auto ins = ws.ins_train();
  ws.intent = train_intent(ins, ws.target.dev, ws.features, cfg.intent_train, &ws.intent_report, ws.threads);
  ws.geometry = fit_geometry(*ws.intent, ins, ws.features, ws.threads);
}

void tune_ensemble(Workspace& ws, const PipelineConfig& cfg) {
  std::vector<Dialogue> ins_dev;
  for (const auto& d : ws.target.dev) {
    if (d.label.is_ins()) ins_dev.push_back(d);
  }
  // Without a dev split, fall back to the INS train data for tuning.
  if (ins_dev.empty()) ins_dev = ws.ins_train();
  const DetectorSuite suite = ws.detector_suite(cfg);
  ws.ensemble = tune_voters(EnsembleConfig{cfg.voters, {}, 0}, suite, ws.features, ins_dev, ws.seeds.examples,
                            cfg.objective, ws.threads);
}

void build_source_index(Workspace& ws) {
  ws.index = SourceIndex::build(std::span<const Dialogue>(ws.source), ws.extractor, ws.threads);
}

AugmentationRun run_augmentation(const Workspace& ws, const PipelineConfig& cfg, std::size_t d) {
  if (d == 0) {
    AugmentationRun empty;
    empty.params.d = 0;
    empty.election = cfg.election;
    empty.backend = std::string(to_string(ws.extractor.kind()));
    return empty;
  }
  if (!ws.index) throw Error(ErrorCode::MissingArtifact, "source index");
  AugmentParams params;
  params.d = d;
  params.m = cfg.m;
  params.strategy = cfg.strategy;
  params.rng_seed = cfg.rng_seed;
  params.cap_factor = cfg.cap_factor;
  params.threads = ws.threads;

  AugmentationRun run;
  if (cfg.election) {
    if (!ws.ensemble) throw Error(ErrorCode::MissingArtifact, "tuned voters");
    const DetectorSuite suite = ws.detector_suite(cfg);
    run = swap_augment(ws.seeds, *ws.index, ws.extractor, params, make_elector(*ws.ensemble, suite, ws.features));
  } else {
    run = no_election_augment(ws.seeds, *ws.index, ws.extractor, params);
  }
  run.source_name = "";
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    run.source_name += (i ? "+" : "") + fs::path(cfg.sources[i]).filename().string();
  }
  return run;
}

BinaryDetector train_gold_detector(const Workspace& ws, const PipelineConfig& cfg, const AugmentationRun& run) {
  const TrainingSet data = aggregate(ws.ins_train(), ws.seeds, run);
  return train_direct(data.records, ws.features, cfg.direct_train, cfg.direct, nullptr, ws.threads);
}

BinaryDetector train_oracle_detector(const Workspace& ws, const PipelineConfig& cfg) {
  return train_oracle(ws.target, ws.features, cfg.direct_train, cfg.direct, nullptr, ws.threads);
}

const std::vector<std::string>& evaluation_methods() {
  static const std::vector<std::string> methods = {"direct",   "oracle",      "maxprob",  "odin",   "entropy",
                                                   "centroid", "mahalanobis", "gradient", "dropout"};
  return methods;
}

std::vector<ScoredExample> score_test_set(const Workspace& ws, const PipelineConfig& cfg, const std::string& method,
                                          const BinaryDetector* direct, std::vector<ScoreRecord>* dump) {
  std::vector<const Dialogue*> rows;
  for (const auto& d : ws.target.test) {
    if (d.label.kind != LabelKind::None) rows.push_back(&d);
  }
  std::vector<ScoredExample> scored(rows.size());
  std::vector<char> votes(rows.size(), 0);

  if (method == "direct" || method == "oracle") {
    if (direct == nullptr) throw Error(ErrorCode::MissingArtifact, method + " detector");
    parallel_for(rows.size(), ws.threads, [&](std::size_t i) {
      const double s = direct->score(ws.features(*rows[i]));
      scored[i] = {rows[i]->id, s, rows[i]->label.is_oos()};
      votes[i] = s > 0.5 ? 1 : 0;
    });
  } else {
    const DetectorKind kind = detector_from_string(method);
    const DetectorSuite suite = ws.detector_suite(cfg);
    double threshold = std::numeric_limits<double>::quiet_NaN();
    if (ws.ensemble) {
      for (std::size_t v = 0; v < ws.ensemble->voters.size(); ++v) {
        if (ws.ensemble->voters[v] == kind && v < ws.ensemble->thresholds.size()) threshold = ws.ensemble->thresholds[v];
      }
    }
    parallel_for(rows.size(), ws.threads, [&](std::size_t i) {
      const DetectorVerdict v =
          suite.verdict(kind, ws.features(*rows[i]), threshold, fnv1a64(turn_signature(*rows[i])));
      scored[i] = {rows[i]->id, v.score, rows[i]->label.is_oos()};
      votes[i] = v.vote ? 1 : 0;
    });
  }
  if (dump != nullptr) {
    for (std::size_t i = 0; i < rows.size(); ++i) dump->push_back({scored[i].id, method, scored[i].score, votes[i] != 0});
  }
  return scored;
}

}  // namespace gold
