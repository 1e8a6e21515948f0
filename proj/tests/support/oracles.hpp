#pragma once

// Brute-force reference implementations. Deliberately naive: quadratic scans
// and full enumerations, no shared code with the library beyond the types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gold/detectors.hpp"
#include "gold/matcher.hpp"
#include "gold/metrics.hpp"

namespace oracle {

inline double auroc(const std::vector<gold::ScoredExample>& xs) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& o : xs) {
    if (!o.is_oos) continue;
    for (const auto& i : xs) {
      if (i.is_oos) continue;
      pairs += 1.0;
      if (o.score > i.score) wins += 1.0;
      else if (o.score == i.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct Operating {
  double threshold;
  double recall;
  double precision;
  double fpr;
};

// One operating point per distinct score: predict OOS iff score >= t.
inline std::vector<Operating> threshold_grid(const std::vector<gold::ScoredExample>& xs) {
  std::set<double, std::greater<>> thresholds;
  double pos = 0, neg = 0;
  for (const auto& x : xs) {
    thresholds.insert(x.score);
    (x.is_oos ? pos : neg) += 1.0;
  }
  std::vector<Operating> grid;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (const auto& x : xs) {
      if (x.score >= t) (x.is_oos ? tp : fp) += 1.0;
    }
    grid.push_back({t, tp / pos, tp / (tp + fp), fp / neg});
  }
  return grid;
}

inline double aupr(const std::vector<gold::ScoredExample>& xs) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& op : threshold_grid(xs)) {
    ap += (op.recall - prev_recall) * op.precision;
    prev_recall = op.recall;
  }
  return ap;
}

inline double fpr_at_recall(const std::vector<gold::ScoredExample>& xs, double n) {
  for (const auto& op : threshold_grid(xs)) {
    if (op.recall >= n - 1e-12) return op.fpr;
  }
  return 1.0;
}

// Exhaustive scan: every item's distance through the public pairwise
// function, then a full sort by (distance, id).
inline std::vector<gold::Match> knn(const gold::SourceIndex& index, const std::vector<double>& query, std::size_t k) {
  std::vector<gold::Match> all;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto v = index.vector(i);
    all.push_back({index.item(i).id, gold::cosine_distance(std::span<const double>(query), v)});
  }
  std::sort(all.begin(), all.end(), [](const gold::Match& a, const gold::Match& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.source_id < b.source_id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

// Pooled within-class covariance divided by N, by explicit loops.
inline Eigen::MatrixXd pooled_covariance(const std::vector<Eigen::VectorXd>& xs, const std::vector<std::size_t>& ys,
                                         std::size_t classes) {
  const auto d = xs.front().size();
  std::vector<Eigen::VectorXd> mean(classes, Eigen::VectorXd::Zero(d));
  std::vector<double> count(classes, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean[ys[i]] += xs[i];
    count[ys[i]] += 1.0;
  }
  for (std::size_t c = 0; c < classes; ++c) mean[c] /= count[c];
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        cov(r, c) += (xs[i](r) - mean[ys[i]](r)) * (xs[i](c) - mean[ys[i]](c));
      }
    }
  }
  return cov / static_cast<double>(xs.size());
}

inline double min_distance(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& x) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) s += (x(j) - centroids(c, j)) * (x(j) - centroids(c, j));
    best = std::min(best, std::sqrt(s));
  }
  return best;
}

inline double f1_at(const std::vector<gold::ScoredLabel>& xs, double t) {
  double tp = 0, fp = 0, fn = 0;
  for (const auto& x : xs) {
    const bool vote = x.score > t;
    if (vote && x.is_oos) tp += 1;
    if (vote && !x.is_oos) fp += 1;
    if (!vote && x.is_oos) fn += 1;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

// Tries every midpoint and both infinities; keeps the smallest best threshold.
inline std::pair<double, double> best_f1_threshold(const std::vector<gold::ScoredLabel>& xs) {
  std::set<double> distinct;
  for (const auto& x : xs) distinct.insert(x.score);
  std::vector<double> cands = {-std::numeric_limits<double>::infinity()};
  for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) cands.push_back((*it + *std::next(it)) / 2);
  cands.push_back(std::numeric_limits<double>::infinity());
  double best_t = cands.front(), best = -1.0;
  for (double t : cands) {
    const double v = f1_at(xs, t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  return {best_t, best};
}

}  // namespace oracle
