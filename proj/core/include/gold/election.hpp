#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gold/corpus.hpp"
#include "gold/detectors.hpp"
#include "gold/embedding.hpp"
#include "gold/generator.hpp"
#include "gold/matcher.hpp"
#include "json.hpp"

namespace gold {

struct EnsembleConfig {
  // One voter per indirect family: probability threshold, outlier distance,
  // Bayesian ensemble.
  std::vector<DetectorKind> voters = {DetectorKind::Entropy, DetectorKind::Mahalanobis, DetectorKind::Dropout};
  std::vector<double> thresholds;  // parallel to voters; NaN marks an untuned voter
  std::size_t quorum = 0;          // 0 selects default_quorum(voters.size())

  static std::size_t default_quorum(std::size_t n_voters) noexcept;
  std::size_t effective_quorum() const noexcept { return quorum != 0 ? quorum : default_quorum(voters.size()); }
  void validate() const;

  nlohmann::json to_json() const;
  static EnsembleConfig from_json(const nlohmann::json& j);
};

struct Ballot {
  bool elected = false;
  std::vector<DetectorVerdict> verdicts;
};

Ballot tally(std::vector<DetectorVerdict> verdicts, std::size_t quorum);

// Runs the candidate through every voter. Throws UntunedVoter when a
// score-based voter has no threshold.
Ballot hold_election(const Candidate& c, const EnsembleConfig& cfg, const DetectorSuite& suite,
                     const Featurizer& features);

using Elector = std::function<Ballot(const Candidate&)>;
Elector make_elector(const EnsembleConfig& cfg, const DetectorSuite& suite, const Featurizer& features);
Elector accept_all_elector();

// Tunes every score-based voter on in-scope dev dialogues versus the seed set.
EnsembleConfig tune_voters(EnsembleConfig cfg, const DetectorSuite& suite, const Featurizer& features,
                           std::span<const Dialogue> ins_dev, std::span<const Dialogue> oos_seed,
                           ThresholdObjective objective = ThresholdObjective::F1, unsigned threads = 1);

struct AugmentParams {
  std::size_t d = 24;          // elected candidates wanted per seed
  std::size_t m = 0;           // neighbors per batch; 0 means m = d
  SwapStrategy strategy = SwapStrategy::RandomUserTurn;
  std::uint64_t rng_seed = 0;
  std::size_t cap_factor = 10; // at most cap_factor * d neighbors examined per seed
  unsigned threads = 1;

  std::size_t batch() const noexcept { return m != 0 ? m : d; }
  nlohmann::json to_json() const;
};

struct SeedOutcome {
  std::string seed_id;
  std::vector<Candidate> elected;
  std::vector<Candidate> examined;  // every generated candidate, in neighbor order
  std::size_t neighbors_examined = 0;
  std::size_t duplicates = 0;
  bool shortfall = false;
};

struct AugmentationRun {
  AugmentParams params;
  bool election = true;
  std::string backend;
  std::string source_name;
  std::vector<SeedOutcome> seeds;
  std::vector<Candidate> aggregate;  // union of elected sets after dedupe, seed order

  std::size_t shortfall_count() const;
  // Parameters, per-seed counts and shortfalls. Contains no timing data.
  nlohmann::json manifest() const;
};

// Consumes each seed's neighbor list in batches of m, electing candidates
// until d are accepted or cap_factor * d neighbors have been examined.
AugmentationRun swap_augment(const SeedSet& seeds, const SourceIndex& index, const Embedder& extractor,
                             const AugmentParams& params, const Elector& elector);

// Ablation: every generated candidate is accepted.
AugmentationRun no_election_augment(const SeedSet& seeds, const SourceIndex& index, const Embedder& extractor,
                                    AugmentParams params);

struct TrainingSet {
  std::vector<Dialogue> records;
  std::size_t n_ins = 0;
  std::size_t n_seed = 0;
  std::size_t n_pseudo = 0;

  nlohmann::json counts() const;
};

// INS train + seed set + elected pseudo-OOS, in that order.
TrainingSet aggregate(std::span<const Dialogue> ins_train, const SeedSet& seeds, const AugmentationRun& run);

}  // namespace gold
