#include "gold/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gold/error.hpp"

namespace gold {

using nlohmann::json;

namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts check(std::span<const ScoredExample> scored) {
  Counts c;
  for (const auto& s : scored) {
    if (!std::isfinite(s.score)) throw Error(ErrorCode::InvalidConfig, "non-finite score for " + s.id);
    (s.is_oos ? c.pos : c.neg) += 1;
  }
  if (c.pos == 0 || c.neg == 0) throw Error(ErrorCode::SingleClassScores, "metrics need INS and OOS examples");
  return c;
}

std::vector<ScoredExample> descending(std::span<const ScoredExample> scored) {
  std::vector<ScoredExample> v(scored.begin(), scored.end());
  std::stable_sort(v.begin(), v.end(), [](const ScoredExample& a, const ScoredExample& b) { return a.score > b.score; });
  return v;
}

}  // namespace

double auroc(std::span<const ScoredExample> scored) {
  const Counts c = check(scored);
  std::vector<ScoredExample> v(scored.begin(), scored.end());
  std::sort(v.begin(), v.end(), [](const ScoredExample& a, const ScoredExample& b) { return a.score < b.score; });
  // Mann-Whitney U with midranks for ties.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (v[k].is_oos) rank_sum += midrank;
    }
    i = j;
  }
  const auto pos = static_cast<double>(c.pos);
  const double u = rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * static_cast<double>(c.neg));
}

double aupr(std::span<const ScoredExample> scored) {
  const Counts c = check(scored);
  const auto v = descending(scored);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0, prev_tp = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) {
      if (v[j].is_oos) ++tp;
      ++j;
    }
    seen = j;
    if (tp != prev_tp) {
      const double delta_recall = static_cast<double>(tp - prev_tp) / static_cast<double>(c.pos);
      ap += delta_recall * static_cast<double>(tp) / static_cast<double>(seen);
      prev_tp = tp;
    }
    i = j;
  }
  return ap;
}

double fpr_at_recall(std::span<const ScoredExample> scored, double n) {
  if (!(n > 0.0 && n <= 1.0)) throw Error(ErrorCode::InvalidConfig, "recall level must be in (0, 1]");
  const Counts c = check(scored);
  const auto v = descending(scored);
  // Relative slack so that e.g. 9/10 counts as reaching 0.9.
  const double needed = n * static_cast<double>(c.pos) * (1.0 - 1e-12);
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) {
      (v[j].is_oos ? tp : fp) += 1;
      ++j;
    }
    if (static_cast<double>(tp) >= needed) return static_cast<double>(fp) / static_cast<double>(c.neg);
    i = j;
  }
  return static_cast<double>(fp) / static_cast<double>(c.neg);
}

EvalReport evaluate(std::span<const ScoredExample> scored, json run) {
  const Counts c = check(scored);
  EvalReport r;
  r.auroc = auroc(scored);
  r.aupr = aupr(scored);
  r.fpr_at_95 = fpr_at_recall(scored, 0.95);
  r.fpr_at_90 = fpr_at_recall(scored, 0.90);
  r.n_ins = c.neg;
  r.n_oos = c.pos;
  r.run = std::move(run);
  return r;
}

json EvalReport::to_json() const {
  return {{"auroc", auroc},   {"aupr", aupr},   {"fpr_at_95", fpr_at_95}, {"fpr_at_90", fpr_at_90},
          {"n_ins", n_ins},   {"n_oos", n_oos}, {"run", run}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  r.auroc = j.at("auroc").get<double>();
  r.aupr = j.at("aupr").get<double>();
  r.fpr_at_95 = j.at("fpr_at_95").get<double>();
  r.fpr_at_90 = j.at("fpr_at_90").get<double>();
  r.n_ins = j.at("n_ins").get<std::size_t>();
  r.n_oos = j.at("n_oos").get<std::size_t>();
  r.run = j.value("run", json());
  return r;
}

}  // namespace gold
