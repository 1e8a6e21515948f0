#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gold/corpus.hpp"
#include "gold/detectors.hpp"
#include "gold/election.hpp"
#include "gold/embedding.hpp"
#include "gold/generator.hpp"
#include "gold/intent_model.hpp"
#include "gold/matcher.hpp"
#include "gold/metrics.hpp"
#include "gold/oos_model.hpp"
#include "json.hpp"

namespace gold {

// Every knob of one augmentation + evaluation run. Serialized into every
// output so runs can be compared by digest.
struct PipelineConfig {
  std::string target;                // dataset prefix: <target>.{train,dev,test}.jsonl
  std::vector<std::string> sources;  // concatenated into one source pool

  std::string extractor = "tfidf";   // matching backend
  std::string features = "tfidf";    // classifier backend
  DialogueMode feature_mode = DialogueMode::ContextMeanPlusFinal;
  std::size_t max_features = 7000;
  std::string wordvec_path;
  std::string external_path;
  std::size_t random_dim = kDefaultRandomDim;
  bool l2_normalize = false;

  double seed_fraction = 0.01;
  std::size_t d = 24;
  std::size_t m = 0;
  std::size_t cap_factor = 10;
  SwapStrategy strategy = SwapStrategy::RandomUserTurn;
  bool election = true;
  std::vector<DetectorKind> voters = {DetectorKind::Entropy, DetectorKind::Mahalanobis, DetectorKind::Dropout};
  ThresholdObjective objective = ThresholdObjective::F1;
  DetectorParams detector_params;

  TrainConfig intent_train;
  TrainConfig direct_train;
  DirectOptions direct;

  std::uint64_t rng_seed = 0;
  std::vector<std::string> methods = {"direct"};
  std::vector<std::size_t> sweep;  // optional match-count sweep

  // Applies rng_seed to every stage that draws randomness.
  PipelineConfig seeded(std::uint64_t seed) const;
  void validate() const;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig from_json(const nlohmann::json& j, PipelineConfig defaults);
  std::string digest() const;
};

// Fitted state shared by the pipeline stages.
struct Workspace {
  DatasetSplit target;
  std::vector<Dialogue> source;
  Featurizer features;
  Embedder extractor;
  SeedSet seeds;
  std::optional<SoftmaxClassifier> intent;
  std::optional<InsGeometry> geometry;
  std::optional<EnsembleConfig> ensemble;
  std::optional<SourceIndex> index;
  TrainReport intent_report;
  unsigned threads = 1;

  std::vector<Dialogue> ins_train() const;
  std::vector<Dialogue> oos_pool() const;
  DetectorSuite detector_suite(const PipelineConfig& cfg) const;
};

// Loads the target prefix and every source file; source ids are prefixed
// with the file stem when more than one source is given.
std::pair<DatasetSplit, std::vector<Dialogue>> load_datasets(const PipelineConfig& cfg);

// Builds an embedding backend. TF-IDF is fitted on `corpus`.
Embedder make_backend(const std::string& name, const PipelineConfig& cfg, const std::vector<std::string>& corpus);

// Fits embeddings and samples the seed set.
Workspace prepare_workspace(const PipelineConfig& cfg, DatasetSplit target, std::vector<Dialogue> source,
                            unsigned threads = 1);
void train_supporting(Workspace& ws, const PipelineConfig& cfg);
void tune_ensemble(Workspace& ws, const PipelineConfig& cfg);
void build_source_index(Workspace& ws);

// d = 0 yields an empty run (seed-only training).
AugmentationRun run_augmentation(const Workspace& ws, const PipelineConfig& cfg, std::size_t d);
BinaryDetector train_gold_detector(const Workspace& ws, const PipelineConfig& cfg, const AugmentationRun& run);
BinaryDetector train_oracle_detector(const Workspace& ws, const PipelineConfig& cfg);

// Scores the labeled test split. `direct` is required for methods "direct"
// and "oracle" (pass the matching detector).
std::vector<ScoredExample> score_test_set(const Workspace& ws, const PipelineConfig& cfg, const std::string& method,
                                          const BinaryDetector* direct = nullptr,
                                          std::vector<ScoreRecord>* dump = nullptr);

const std::vector<std::string>& evaluation_methods();

}  // namespace gold
