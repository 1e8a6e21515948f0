#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gold/artifact.hpp"
#include "gold/pipeline.hpp"

namespace gold {

// Artifact files inside a working directory.
namespace artifact {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kIngest = "ingest.json";
inline constexpr const char* kEmbeddings = "embeddings.json";
inline constexpr const char* kSeeds = "seeds.jsonl";
inline constexpr const char* kIntent = "intent_model.json";
inline constexpr const char* kVoters = "voters.json";
inline constexpr const char* kCandidates = "candidates.jsonl";
inline constexpr const char* kElected = "elected.jsonl";
inline constexpr const char* kAugmented = "augmented.jsonl";
inline constexpr const char* kAugmentManifest = "augment_manifest.json";
inline constexpr const char* kDirect = "direct_model.json";
inline constexpr const char* kOracle = "oracle_model.json";
inline constexpr const char* kSweep = "sweep.json";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace artifact

// Loads stage artifacts from a working directory, computing (and saving)
// the ones a command owns. Missing upstream artifacts are an error unless
// train_missing is set.
class Session {
 public:
  Session(PipelineConfig cfg, std::filesystem::path dir, bool train_missing, unsigned threads);

  const PipelineConfig& config() const noexcept { return cfg_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }
  ArtifactMeta meta() const;
  bool record_timing = false;

  void write_config();
  nlohmann::json ingest();
  Workspace& embeddings(bool owner = false);
  Workspace& intent(bool owner = false);
  Workspace& voters(bool owner = false);
  // Returns the manifest; `training` receives the aggregated data.
  nlohmann::json augment(std::vector<Dialogue>* training = nullptr);
  std::vector<Dialogue> training_set(bool owner = false);
  const BinaryDetector& direct(bool owner = false);
  const BinaryDetector& oracle(bool owner = false);
  EvalReport evaluate(const std::string& method);
  nlohmann::json sweep(const std::vector<std::size_t>& ds);

 private:
  std::filesystem::path path(const char* name) const { return dir_ / name; }
  bool may_compute(bool owner) const { return owner || train_missing_; }
  void load_datasets_once();
  EvalReport evaluate_scores(std::span<const ScoredExample> scored, const std::string& method) const;

  PipelineConfig cfg_;
  std::filesystem::path dir_;
  bool train_missing_;
  unsigned threads_;
  bool datasets_loaded_ = false;
  bool embeddings_ready_ = false;
  DatasetSplit target_;
  std::vector<Dialogue> source_;
  Workspace ws_;
  std::optional<BinaryDetector> direct_;
  std::optional<BinaryDetector> oracle_;
};

}  // namespace gold
