#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gold {

// OOS is the positive class throughout.
struct ScoredExample {
  std::string id;
  double score = 0.0;  // higher = more OOS
  bool is_oos = false;
};

struct EvalReport {
  double auroc = 0.0;
  double aupr = 0.0;
  double fpr_at_95 = 0.0;
  double fpr_at_90 = 0.0;
  std::size_t n_ins = 0;
  std::size_t n_oos = 0;
  nlohmann::json run;  // free-form run metadata (method, digests, seeds)

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// P(score_oos > score_ins) + 0.5 P(tie), via average ranks.
double auroc(std::span<const ScoredExample> scored);
// Average precision with tied scores entering as one threshold group.
double aupr(std::span<const ScoredExample> scored);
// INS false-alarm rate at the largest threshold whose OOS recall reaches n.
double fpr_at_recall(std::span<const ScoredExample> scored, double n);

EvalReport evaluate(std::span<const ScoredExample> scored, nlohmann::json run = {});

}  // namespace gold
