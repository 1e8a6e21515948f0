#include "gold/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <sstream>

#include "CLI11.hpp"
#include "gold/artifact.hpp"
#include "gold/error.hpp"
#include "gold/parallel.hpp"
#include "gold/text.hpp"
#include "session.hpp"

namespace gold {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunFlags {
  std::string config;
  std::string target;
  std::vector<std::string> sources;
  std::string out = "gold-out";
  std::string extractor;
  std::string features;
  std::string feature_mode;
  std::string wordvec;
  std::string external;
  std::size_t max_features = 0;
  std::size_t matches = 0;
  std::size_t batch = 0;
  std::size_t cap_factor = 0;
  std::string strategy;
  std::string voters;
  std::string objective;
  double seed_fraction = 0.0;
  std::uint64_t rng_seed = 0;
  bool no_election = false;
  bool train_missing = false;
  bool record_timing = false;
  bool json = false;
  std::vector<std::string> methods;
  std::vector<std::size_t> sweep;
};

void add_run_options(CLI::App* sub, RunFlags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its keys");
  sub->add_option("--target", f.target, "target dataset prefix (<prefix>.{train,dev,test}.jsonl)");
  sub->add_option("--source", f.sources, "source dataset file or prefix; repeatable");
  sub->add_option("--out", f.out, "working directory for artifacts")->capture_default_str();
  sub->add_option("--extractor", f.extractor, "matching backend: tfidf, wordvec, external, random");
  sub->add_option("--features", f.features, "classifier feature backend");
  sub->add_option("--feature-mode", f.feature_mode, "final_user or context_mean_plus_final");
  sub->add_option("--wordvec", f.wordvec, "word-vector text file");
  sub->add_option("--external", f.external, "precomputed vector store (JSON lines)");
  sub->add_option("--max-features", f.max_features, "TF-IDF vocabulary size");
  sub->add_option("--matches", f.matches, "elected candidates per seed (d)");
  sub->add_option("--batch", f.batch, "neighbors per batch (m); 0 means d");
  sub->add_option("--cap-factor", f.cap_factor, "examine at most cap_factor * d neighbors per seed");
  sub->add_option("--strategy", f.strategy, "random or last");
  sub->add_option("--voters", f.voters, "comma-separated detector names");
  sub->add_option("--objective", f.objective, "threshold objective: f1 or youden");
  sub->add_option("--seed-fraction", f.seed_fraction, "known OOS budget as a fraction of INS train");
  sub->add_option("--rng-seed", f.rng_seed, "seed for every random draw");
  sub->add_flag("--no-election", f.no_election, "accept every candidate");
  sub->add_flag("--train-missing", f.train_missing, "compute missing upstream artifacts");
  sub->add_flag("--record-timing", f.record_timing, "add wall-clock timings to manifests");
  sub->add_flag("--json", f.json, "print reports as JSON");
}

bool given(const CLI::App* sub, const char* name) {
  const CLI::Option* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

PipelineConfig build_config(const CLI::App* sub, const RunFlags& f) {
  PipelineConfig cfg;
  if (!f.config.empty()) cfg = PipelineConfig::from_json(read_json_file(f.config));
  if (given(sub, "--target")) cfg.target = f.target;
  if (given(sub, "--source")) cfg.sources = f.sources;
  if (given(sub, "--extractor")) cfg.extractor = f.extractor;
  if (given(sub, "--features")) cfg.features = f.features;
  if (given(sub, "--feature-mode")) cfg.feature_mode = dialogue_mode_from_string(f.feature_mode);
  if (given(sub, "--wordvec")) cfg.wordvec_path = f.wordvec;
  if (given(sub, "--external")) cfg.external_path = f.external;
  if (given(sub, "--max-features")) cfg.max_features = f.max_features;
  if (given(sub, "--matches")) cfg.d = f.matches;
  if (given(sub, "--batch")) cfg.m = f.batch;
  if (given(sub, "--cap-factor")) cfg.cap_factor = f.cap_factor;
  if (given(sub, "--strategy")) cfg.strategy = swap_strategy_from_string(f.strategy);
  if (given(sub, "--voters")) {
    cfg.voters.clear();
    for (const auto& v : split_commas(f.voters)) cfg.voters.push_back(detector_from_string(v));
  }
  if (given(sub, "--objective")) cfg.objective = objective_from_string(f.objective);
  if (given(sub, "--seed-fraction")) cfg.seed_fraction = f.seed_fraction;
  if (given(sub, "--rng-seed")) cfg.rng_seed = f.rng_seed;
  if (f.no_election) cfg.election = false;
  if (given(sub, "--method")) cfg.methods = f.methods;
  if (given(sub, "--sweep-matches")) cfg.sweep = f.sweep;
  cfg = cfg.seeded(cfg.rng_seed);
  cfg.validate();
  return cfg;
}

void emit(std::ostream& out, const json& doc, bool as_json) {
  if (as_json) {
    out << doc.dump(2) << '\n';
    return;
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it->is_string()) {
      out << it.key() << ": " << it->get<std::string>() << '\n';
    } else {
      out << it.key() << ": " << it->dump() << '\n';
    }
  }
}

json eval_summary(const EvalReport& r) {
  return {{"auroc", r.auroc}, {"aupr", r.aupr}, {"fpr_at_95", r.fpr_at_95}, {"fpr_at_90", r.fpr_at_90},
          {"n_ins", r.n_ins}, {"n_oos", r.n_oos}};
}

json augment_summary(const json& manifest) {
  const json& p = manifest.at("parameters");
  return {{"d", p.at("d")},
          {"election", p.at("election")},
          {"elected", manifest.at("aggregate_size")},
          {"shortfalls", manifest.at("shortfalls").size()},
          {"training_set", manifest.at("training_set")}};
}

struct SynthFlags {
  std::string out;
  std::string spec;
  std::size_t n_ins = 0;
  std::size_t n_intents = 0;
  std::size_t n_oos = 0;
  double vocab_overlap = 0.0;
  std::size_t n_source = 0;
  double source_ins_fraction = 0.0;
  std::size_t n_topics = 0;
  std::uint64_t rng_seed = 0;
  std::size_t wordvec_dim = 50;
  bool json = false;
};

json run_synth(const CLI::App* sub, const SynthFlags& f) {
  SynthSpec spec;
  if (!f.spec.empty()) spec = SynthSpec::from_json(read_json_file(f.spec));
  if (given(sub, "--n-ins")) spec.n_ins = f.n_ins;
  if (given(sub, "--intents")) spec.n_intents = f.n_intents;
  if (given(sub, "--n-oos")) spec.n_oos = f.n_oos;
  if (given(sub, "--vocab-overlap")) spec.vocab_overlap = f.vocab_overlap;
  if (given(sub, "--source-size")) spec.n_source = f.n_source;
  if (given(sub, "--source-ins-fraction")) spec.source_ins_fraction = f.source_ins_fraction;
  if (given(sub, "--topics")) spec.n_topics = f.n_topics;
  if (given(sub, "--rng-seed")) spec.rng_seed = f.rng_seed;

  const SynthCorpus corpus = synth_corpus(spec);
  const fs::path dir = f.out;
  fs::create_directories(dir);
  const ArtifactMeta meta{spec.rng_seed, hex64(fnv1a64(spec.to_json().dump()))};
  auto write = [&](const fs::path& p, std::span<const Dialogue> ds) {
    std::vector<json> rows;
    for (const auto& d : ds) rows.push_back(to_json(d));
    write_jsonl_artifact(p, rows, meta);
  };
  write(dir / "target.train.jsonl", corpus.target.train);
  write(dir / "target.dev.jsonl", corpus.target.dev);
  write(dir / "target.test.jsonl", corpus.target.test);
  write(dir / "source.jsonl", corpus.source.train);
  json doc = {{"spec", spec.to_json()},
              {"target", (dir / "target").string()},
              {"source", (dir / "source.jsonl").string()},
              {"counts", {{"train", corpus.target.train.size()},
                          {"dev", corpus.target.dev.size()},
                          {"test", corpus.target.test.size()},
                          {"source", corpus.source.train.size()}}}};
  if (f.wordvec_dim > 0) {
    const auto table = synth_word_vectors(spec, f.wordvec_dim);
    write_word_vectors(dir / "wordvec.txt", table);
    doc["wordvec"] = (dir / "wordvec.txt").string();
  }
  write_json_artifact(dir / "synth.json", doc, meta);
  return doc;
}

json run_pipeline(const PipelineConfig& cfg, const RunFlags& f, unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path run_dir = fs::path(f.out) / ("run-" + cfg.digest());
  if (fs::is_regular_file(run_dir / artifact::kManifest)) {
    json done = read_json_file(run_dir / artifact::kManifest);
    done["run_dir"] = run_dir.string();
    done["reused"] = true;
    return done;
  }
  Session s(cfg, run_dir, true, threads);
  s.record_timing = f.record_timing;
  s.write_config();
  json stages = json::array();
  s.ingest();
  stages.push_back("ingest");
  s.embeddings(true);
  stages.push_back("fit-embed");
  s.intent(true);
  stages.push_back("train-intent");
  if (cfg.election) {
    s.voters(true);
    stages.push_back("tune");
  }
  const json manifest = s.augment();
  stages.push_back("augment");
  s.direct(true);
  stages.push_back("train-direct");
  json reports = json::object();
  for (const auto& method : cfg.methods) reports[method] = eval_summary(s.evaluate(method));
  stages.push_back("evaluate");
  if (!cfg.sweep.empty()) {
    s.sweep(cfg.sweep);
    stages.push_back("sweep");
  }
  json doc = {{"run_dir", run_dir.filename().string()},
              {"stages", stages},
              {"augmentation", augment_summary(manifest)},
              {"reports", reports}};
  if (f.record_timing) {
    doc["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  write_json_artifact(run_dir / artifact::kManifest, doc, s.meta());
  doc["run_dir"] = run_dir.string();
  return doc;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"goldforge: out-of-scope data augmentation for dialogue intent detection"};
  app.require_subcommand(1);
  app.name(args.empty() ? "goldforge" : fs::path(args.front()).filename().string());

  RunFlags f;
  std::string method = "direct";
  struct Command {
    CLI::App* app;
    std::string name;
  };
  std::vector<Command> commands;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_run_options(sub, f);
    commands.push_back({sub, name});
    return sub;
  };
  add("ingest", "validate and summarize the target and source datasets");
  add("fit-embed", "fit embedding backends and sample the seed set");
  add("train-intent", "train the supporting intent classifier");
  add("tune", "tune voter thresholds on dev INS vs seed OOS");
  add("augment", "generate, elect and aggregate pseudo-OOS candidates");
  add("train-direct", "train the direct OOS detector on the augmented data");
  add("train-oracle", "train the direct detector on all labeled target data");
  CLI::App* evaluate = add("evaluate", "score the test split and write evaluation reports");
  evaluate->add_option("--method", f.methods, "method(s): direct, oracle, maxprob, odin, entropy, centroid, "
                                              "mahalanobis, gradient, dropout")
      ->delimiter(',');
  evaluate->add_option("--sweep-matches", f.sweep, "comma-separated d values for a match-count sweep")
      ->delimiter(',');
  CLI::App* pipeline = add("pipeline", "run every stage into a content-addressed run directory");
  pipeline->add_option("--method", f.methods, "evaluation method(s)")->delimiter(',');
  pipeline->add_option("--sweep-matches", f.sweep, "comma-separated d values for a match-count sweep")
      ->delimiter(',');

  SynthFlags sf;
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic target/source benchmark");
  synth->add_option("--out", sf.out, "output directory")->required();
  synth->add_option("--spec", sf.spec, "JSON spec file");
  synth->add_option("--n-ins", sf.n_ins, "INS train dialogues");
  synth->add_option("--intents", sf.n_intents, "number of intents");
  synth->add_option("--n-oos", sf.n_oos, "OOS dialogues in train and test");
  synth->add_option("--vocab-overlap", sf.vocab_overlap, "share of OOS tokens drawn from INS vocabularies");
  synth->add_option("--source-size", sf.n_source, "source utterances");
  synth->add_option("--source-ins-fraction", sf.source_ins_fraction, "INS-like share of the source pool");
  synth->add_option("--topics", sf.n_topics, "OOS topics");
  synth->add_option("--rng-seed", sf.rng_seed, "generator seed");
  synth->add_option("--wordvec-dim", sf.wordvec_dim, "dimension of the companion word vectors; 0 skips them")
      ->capture_default_str();
  synth->add_flag("--json", sf.json, "print the summary as JSON");

  std::vector<std::string> argv_tail(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  std::string command = "goldforge";
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  const bool as_json = synth->parsed() ? sf.json : f.json;
  try {
    if (synth->parsed()) {
      command = "synth";
      emit(out, run_synth(synth, sf), as_json);
      return 0;
    }
    const unsigned threads = default_threads();
    for (const auto& c : commands) {
      if (!c.app->parsed()) continue;
      command = c.name;
      const PipelineConfig cfg = build_config(c.app, f);
      if (c.name == "pipeline") {
        emit(out, run_pipeline(cfg, f, threads), as_json);
        return 0;
      }
      Session s(cfg, f.out, f.train_missing, threads);
      s.record_timing = f.record_timing;
      s.write_config();
      json doc;
      if (c.name == "ingest") {
        doc = s.ingest();
      } else if (c.name == "fit-embed") {
        const Workspace& ws = s.embeddings(true);
        doc = {{"feature_dim", ws.features.dim()},
               {"extractor", std::string(to_string(ws.extractor.kind()))},
               {"extractor_dim", ws.extractor.dim()},
               {"seed_budget", ws.seeds.budget},
               {"seeds", ws.seeds.examples.size()}};
      } else if (c.name == "train-intent") {
        const Workspace& ws = s.intent(true);
        doc = {{"intents", ws.intent->intent_names()}, {"report", ws.intent_report.to_json()}};
      } else if (c.name == "tune") {
        doc = s.voters(true).ensemble->to_json();
      } else if (c.name == "augment") {
        doc = augment_summary(s.augment());
      } else if (c.name == "train-direct") {
        doc = {{"model", s.dir().string() + "/" + artifact::kDirect}, {"dim", s.direct(true).dim()}};
      } else if (c.name == "train-oracle") {
        doc = {{"model", s.dir().string() + "/" + artifact::kOracle}, {"dim", s.oracle(true).dim()}};
      } else if (c.name == "evaluate") {
        doc = json::object();
        const auto methods = f.methods.empty() && f.sweep.empty() ? std::vector<std::string>{method} : f.methods;
        for (const auto& m : methods) doc[m] = eval_summary(s.evaluate(m));
        if (!f.sweep.empty()) doc["sweep"] = s.sweep(f.sweep)["points"];
      }
      emit(out, doc, as_json);
      return 0;
    }
  } catch (const Error& e) {
    err << json{{"error", to_string(e.code())}, {"detail", e.detail()}, {"command", command}}.dump() << '\n';
    return 2;
  } catch (const json::exception& e) {
    err << json{{"error", to_string(ErrorCode::MalformedRecord)}, {"detail", e.what()}, {"command", command}}.dump()
        << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << json{{"error", "Internal"}, {"detail", e.what()}, {"command", command}}.dump() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace gold
