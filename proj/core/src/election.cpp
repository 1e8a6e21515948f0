#include "gold/election.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "gold/error.hpp"
#include "gold/parallel.hpp"
#include "gold/text.hpp"

namespace gold {

using nlohmann::json;

std::size_t EnsembleConfig::default_quorum(std::size_t n_voters) noexcept {
  return (n_voters + 1) / 2 + (n_voters % 2 == 0 ? 1 : 0);
}

void EnsembleConfig::validate() const {
  if (voters.empty()) throw Error(ErrorCode::InvalidConfig, "ensemble has no voters");
  if (voters.size() % 2 == 0) throw Error(ErrorCode::InvalidConfig, "ensemble needs an odd number of voters");
  if (!thresholds.empty() && thresholds.size() != voters.size()) {
    throw Error(ErrorCode::InvalidConfig, "thresholds must parallel voters");
  }
  if (effective_quorum() > voters.size()) throw Error(ErrorCode::InvalidConfig, "quorum exceeds voter count");
}

json EnsembleConfig::to_json() const {
  json voters_json = json::array();
  for (std::size_t i = 0; i < voters.size(); ++i) {
    json v = {{"detector", to_string(voters[i])}};
    if (voters[i] != DetectorKind::Dropout) {
      v["threshold"] = threshold_to_json(i < thresholds.size() ? thresholds[i]
                                                                : std::numeric_limits<double>::quiet_NaN());
    }
    voters_json.push_back(std::move(v));
  }
  return {{"voters", std::move(voters_json)}, {"quorum", effective_quorum()}};
}

EnsembleConfig EnsembleConfig::from_json(const json& j) {
  EnsembleConfig cfg;
  cfg.voters.clear();
  for (const auto& v : j.at("voters")) {
    cfg.voters.push_back(detector_from_string(v.at("detector").get<std::string>()));
    cfg.thresholds.push_back(v.contains("threshold") ? threshold_from_json(v["threshold"])
                                                     : std::numeric_limits<double>::quiet_NaN());
  }
  cfg.quorum = j.value("quorum", std::size_t{0});
  cfg.validate();
  return cfg;
}

Ballot tally(std::vector<DetectorVerdict> verdicts, std::size_t quorum) {
  const auto yes = static_cast<std::size_t>(
      std::count_if(verdicts.begin(), verdicts.end(), [](const DetectorVerdict& v) { return v.vote; }));
  return {yes >= quorum, std::move(verdicts)};
}

Ballot hold_election(const Candidate& c, const EnsembleConfig& cfg, const DetectorSuite& suite,
                     const Featurizer& features) {
  const Eigen::VectorXd phi = features(c.dialogue);
  const std::uint64_t salt = fnv1a64(turn_signature(c.dialogue));
  std::vector<DetectorVerdict> verdicts;
  verdicts.reserve(cfg.voters.size());
  for (std::size_t i = 0; i < cfg.voters.size(); ++i) {
    const DetectorKind kind = cfg.voters[i];
    double threshold = std::numeric_limits<double>::quiet_NaN();
    if (kind != DetectorKind::Dropout) {
      if (i >= cfg.thresholds.size() || std::isnan(cfg.thresholds[i])) {
        throw Error(ErrorCode::UntunedVoter, std::string(to_string(kind)));
      }
      threshold = cfg.thresholds[i];
    }
    verdicts.push_back(suite.verdict(kind, phi, threshold, salt));
  }
  return tally(std::move(verdicts), cfg.effective_quorum());
}

Elector make_elector(const EnsembleConfig& cfg, const DetectorSuite& suite, const Featurizer& features) {
  cfg.validate();
  return [cfg, &suite, features](const Candidate& c) { return hold_election(c, cfg, suite, features); };
}

Elector accept_all_elector() {
  return [](const Candidate&) { return Ballot{true, {}}; };
}

EnsembleConfig tune_voters(EnsembleConfig cfg, const DetectorSuite& suite, const Featurizer& features,
                           std::span<const Dialogue> ins_dev, std::span<const Dialogue> oos_seed,
                           ThresholdObjective objective, unsigned threads) {
  cfg.validate();
  std::vector<const Dialogue*> rows;
  for (const auto& d : ins_dev) rows.push_back(&d);
  for (const auto& d : oos_seed) rows.push_back(&d);
  std::vector<Eigen::VectorXd> phis(rows.size());
  std::vector<std::uint64_t> salts(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    phis[i] = features(*rows[i]);
    salts[i] = fnv1a64(turn_signature(*rows[i]));
  });

  cfg.thresholds.assign(cfg.voters.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t v = 0; v < cfg.voters.size(); ++v) {
    if (cfg.voters[v] == DetectorKind::Dropout) continue;
    std::vector<ScoredLabel> scored(rows.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
      scored[i] = {suite.score(cfg.voters[v], phis[i], salts[i]), i >= ins_dev.size()};
    });
    cfg.thresholds[v] = tune_threshold(scored, objective).threshold;
  }
  return cfg;
}

json AugmentParams::to_json() const {
  return {{"d", d},         {"m", batch()},         {"strategy", to_string(strategy)},
          {"rng_seed", rng_seed}, {"cap_factor", cap_factor}};
}

std::size_t AugmentationRun::shortfall_count() const {
  return static_cast<std::size_t>(
      std::count_if(seeds.begin(), seeds.end(), [](const SeedOutcome& s) { return s.shortfall; }));
}

json AugmentationRun::manifest() const {
  json params_json = params.to_json();
  params_json["election"] = election;
  params_json["backend"] = backend;
  params_json["source_name"] = source_name;
  json per_seed = json::array();
  json shortfalls = json::array();
  for (const auto& s : seeds) {
    json entry = {{"seed_id", s.seed_id},
                  {"elected", s.elected.size()},
                  {"neighbors_examined", s.neighbors_examined},
                  {"duplicates", s.duplicates}};
    if (s.shortfall) shortfalls.push_back({{"seed_id", s.seed_id}, {"elected", s.elected.size()}, {"wanted", params.d}});
    per_seed.push_back(std::move(entry));
  }
  return {{"parameters", std::move(params_json)},
          {"per_seed", std::move(per_seed)},
          {"shortfalls", std::move(shortfalls)},
          {"aggregate_size", aggregate.size()}};
}

namespace {

SeedOutcome augment_one(const Dialogue& seed, const std::unordered_set<std::string>& seed_signatures,
                        const SourceIndex& index, const Embedder& extractor, const AugmentParams& p,
                        const Elector& elector) {
  SeedOutcome out;
  out.seed_id = seed.id;
  const std::size_t cap = std::min(p.cap_factor * p.d, index.size());
  const MatchResult neighbors = nearest(seed, index, cap, extractor);
  const std::size_t batch = p.batch();

  std::unordered_set<std::string> seen = seed_signatures;
  std::size_t next = 0;
  while (out.elected.size() < p.d && next < neighbors.matches.size()) {
    const std::size_t batch_end = std::min(next + batch, neighbors.matches.size());
    for (; next < batch_end && out.elected.size() < p.d; ++next) {
      const Match& match = neighbors.matches[next];
      const IndexItem* item = index.find(match.source_id);
      Candidate c = generate(seed, match.source_id, item->text, p.strategy, p.rng_seed);
      ++out.neighbors_examined;
      if (seen.contains(turn_signature(c.dialogue))) {
        ++out.duplicates;
        out.examined.push_back(std::move(c));
        continue;
      }
      const Ballot ballot = elector(c);
      c.elected = ballot.elected;
      if (ballot.elected) {
        seen.insert(turn_signature(c.dialogue));
        out.elected.push_back(c);
      }
      out.examined.push_back(std::move(c));
    }
  }
  out.shortfall = out.elected.size() < p.d;
  return out;
}

}  // namespace

AugmentationRun swap_augment(const SeedSet& seeds, const SourceIndex& index, const Embedder& extractor,
                             const AugmentParams& params, const Elector& elector) {
  if (params.d == 0) throw Error(ErrorCode::InvalidConfig, "d must be >= 1");
  if (params.cap_factor == 0) throw Error(ErrorCode::InvalidConfig, "cap_factor must be >= 1");
  if (index.size() < params.d) {
    throw Error(ErrorCode::ExhaustedSourcePool, "index holds " + std::to_string(index.size()) +
                                                    " utterances, fewer than d = " + std::to_string(params.d));
  }
  std::unordered_set<std::string> seed_signatures;
  for (const auto& s : seeds.examples) seed_signatures.insert(turn_signature(s));

  AugmentationRun run;
  run.params = params;
  run.backend = std::string(to_string(extractor.kind()));
  run.seeds.resize(seeds.examples.size());
  parallel_for(seeds.examples.size(), params.threads, [&](std::size_t i) {
    run.seeds[i] = augment_one(seeds.examples[i], seed_signatures, index, extractor, params, elector);
  });

  std::vector<Candidate> all;
  for (const auto& s : run.seeds) all.insert(all.end(), s.elected.begin(), s.elected.end());
  run.aggregate = dedupe(std::move(all), seeds.examples);
  return run;
}

AugmentationRun no_election_augment(const SeedSet& seeds, const SourceIndex& index, const Embedder& extractor,
                                    AugmentParams params) {
  auto run = swap_augment(seeds, index, extractor, params, accept_all_elector());
  run.election = false;
  return run;
}

json TrainingSet::counts() const {
  return {{"ins", n_ins}, {"seed", n_seed}, {"pseudo", n_pseudo}, {"total", records.size()}};
}

TrainingSet aggregate(std::span<const Dialogue> ins_train, const SeedSet& seeds, const AugmentationRun& run) {
  TrainingSet out;
  for (const auto& d : ins_train) {
    if (!d.label.is_ins()) continue;
    out.records.push_back(d);
    ++out.n_ins;
  }
  for (const auto& d : seeds.examples) {
    Dialogue s = d;
    s.label = Label::oos(false);
    out.records.push_back(std::move(s));
    ++out.n_seed;
  }
  for (const auto& c : run.aggregate) {
    Dialogue p = c.dialogue;
    p.label = Label::oos(true);
    out.records.push_back(std::move(p));
    ++out.n_pseudo;
  }
  return out;
}

}  // namespace gold
