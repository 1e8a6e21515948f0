#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "gold/embedding.hpp"
#include "gold/intent_model.hpp"
#include "json.hpp"

namespace gold {

enum class DetectorKind { MaxProb, Odin, Entropy, Centroid, Mahalanobis, Gradient, Dropout };

std::string_view to_string(DetectorKind kind) noexcept;
DetectorKind detector_from_string(std::string_view name);
const std::vector<DetectorKind>& all_detectors();

struct DetectorParams {
  double odin_temperature = 1000.0;
  double odin_epsilon = 0.001;
  double dropout_rate = 0.3;
  std::size_t dropout_passes = 10;
  std::uint64_t dropout_seed = 0;

  nlohmann::json to_json() const;
  static DetectorParams from_json(const nlohmann::json& j);
  static DetectorParams from_json(const nlohmann::json& j, DetectorParams defaults);
};

// Scores are oriented so that higher means more out-of-scope.
struct DetectorVerdict {
  std::string detector;
  double score = 0.0;
  double threshold = 0.0;  // NaN for dropout, whose vote is a direct majority test
  bool vote = false;       // true = OOS
};

// Class statistics of the in-scope training data in feature space and in
// input-gradient space.
class InsGeometry {
 public:
  // `covariance` is used as given and must be positive definite.
  static InsGeometry from_parts(Eigen::MatrixXd centroids, Eigen::MatrixXd covariance,
                                Eigen::MatrixXd gradient_centroids, double lambda = 0.0);

  const Eigen::MatrixXd& centroids() const noexcept { return centroids_; }  // K x D
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  const Eigen::MatrixXd& gradient_centroids() const noexcept { return gradient_centroids_; }
  double lambda() const noexcept { return lambda_; }

  double min_euclidean(const Eigen::VectorXd& phi) const;
  double min_mahalanobis(const Eigen::VectorXd& phi) const;
  double min_gradient_distance(const Eigen::VectorXd& g) const;

 private:
  Eigen::MatrixXd centroids_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd gradient_centroids_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd whitened_centroids_;  // rows: L^-1 mu_c
  double lambda_ = 0.0;
};

// Pooled within-class covariance (divided by N) plus lambda*I with
// lambda = 1e-3 * trace / D, floored at 1e-6 when the data has no spread.
InsGeometry fit_geometry(const SoftmaxClassifier& model, const Eigen::MatrixXd& features,
                         std::span<const std::size_t> labels);
InsGeometry fit_geometry(const SoftmaxClassifier& model, std::span<const Dialogue> ins_data,
                         const Featurizer& features, unsigned threads = 1);

double score_maxprob(const SoftmaxClassifier& model, const Eigen::VectorXd& phi);
double score_odin(const SoftmaxClassifier& model, const Eigen::VectorXd& phi, double temperature, double epsilon);
double score_entropy(const SoftmaxClassifier& model, const Eigen::VectorXd& phi);
double score_centroid(const InsGeometry& geometry, const Eigen::VectorXd& phi);
double score_mahalanobis(const InsGeometry& geometry, const Eigen::VectorXd& phi);
double score_gradient(const SoftmaxClassifier& model, const InsGeometry& geometry, const Eigen::VectorXd& phi);

// OOS iff no intent wins strictly more than half of the passes; score is the
// share of non-modal passes.
DetectorVerdict dropout_verdict(std::span<const std::size_t> predictions);
DetectorVerdict vote_dropout(const SoftmaxClassifier& model, const Eigen::VectorXd& phi, double rate,
                             std::size_t passes, std::uint64_t rng_seed);

enum class ThresholdObjective { F1, Youden };
ThresholdObjective objective_from_string(std::string_view name);
std::string_view to_string(ThresholdObjective o) noexcept;

struct ScoredLabel {
  double score = 0.0;
  bool is_oos = false;
};

struct ThresholdChoice {
  double threshold = 0.0;
  double objective = 0.0;
  bool degenerate = false;  // fewer than two distinct scores
};

// Candidates are -inf, midpoints of adjacent distinct scores, and +inf; the
// vote is score > threshold. Ties go to the smaller threshold.
ThresholdChoice tune_threshold(std::span<const ScoredLabel> scores, ThresholdObjective objective);

// Objective value of one threshold (exposed for tests and reports).
double threshold_objective(std::span<const ScoredLabel> scores, double threshold, ThresholdObjective objective);

// Model + geometry + parameters behind one interface. Holds references; the
// model and geometry must outlive it.
class DetectorSuite {
 public:
  DetectorSuite(const SoftmaxClassifier& model, const InsGeometry& geometry, DetectorParams params = {});

  // `salt` decorrelates dropout masks across inputs deterministically.
  double score(DetectorKind kind, const Eigen::VectorXd& phi, std::uint64_t salt = 0) const;
  // Score-based detectors vote score > threshold; dropout ignores threshold.
  DetectorVerdict verdict(DetectorKind kind, const Eigen::VectorXd& phi, double threshold,
                          std::uint64_t salt = 0) const;

  const SoftmaxClassifier& model() const noexcept { return *model_; }
  const InsGeometry& geometry() const noexcept { return *geometry_; }
  const DetectorParams& params() const noexcept { return params_; }

 private:
  const SoftmaxClassifier* model_;
  const InsGeometry* geometry_;
  DetectorParams params_;
};

// JSON numbers cannot hold infinities; thresholds use "inf"/"-inf" strings.
nlohmann::json threshold_to_json(double t);
double threshold_from_json(const nlohmann::json& j);

struct ScoreRecord {
  std::string id;
  std::string detector;
  double score = 0.0;
  bool vote = false;
};
void write_score_dump(const std::filesystem::path& path, std::span<const ScoreRecord> records);

}  // namespace gold
