#include "gold/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "gold/error.hpp"
#include "gold/text.hpp"

namespace gold {

using nlohmann::json;

std::string_view to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::MaxProb: return "maxprob";
    case DetectorKind::Odin: return "odin";
    case DetectorKind::Entropy: return "entropy";
    case DetectorKind::Centroid: return "centroid";
    case DetectorKind::Mahalanobis: return "mahalanobis";
    case DetectorKind::Gradient: return "gradient";
    case DetectorKind::Dropout: return "dropout";
  }
  return "unknown";
}

DetectorKind detector_from_string(std::string_view name) {
  for (const auto k : all_detectors()) {
    if (to_string(k) == name) return k;
  }
  // The distance-to-centroid baseline is often called by the encoder's name.
  if (name == "bert") return DetectorKind::Centroid;
  throw Error(ErrorCode::InvalidConfig, "unknown detector '" + std::string(name) + "'");
}

const std::vector<DetectorKind>& all_detectors() {
  static const std::vector<DetectorKind> kinds = {DetectorKind::MaxProb,  DetectorKind::Odin,
                                                  DetectorKind::Entropy,  DetectorKind::Centroid,
                                                  DetectorKind::Mahalanobis, DetectorKind::Gradient,
                                                  DetectorKind::Dropout};
  return kinds;
}

json DetectorParams::to_json() const {
  return {{"odin_temperature", odin_temperature}, {"odin_epsilon", odin_epsilon},
          {"dropout_rate", dropout_rate},         {"dropout_passes", dropout_passes},
          {"dropout_seed", dropout_seed}};
}

DetectorParams DetectorParams::from_json(const json& j) { return from_json(j, DetectorParams{}); }

DetectorParams DetectorParams::from_json(const json& j, DetectorParams d) {
  d.odin_temperature = j.value("odin_temperature", d.odin_temperature);
  d.odin_epsilon = j.value("odin_epsilon", d.odin_epsilon);
  d.dropout_rate = j.value("dropout_rate", d.dropout_rate);
  d.dropout_passes = j.value("dropout_passes", d.dropout_passes);
  d.dropout_seed = j.value("dropout_seed", d.dropout_seed);
  return d;
}

// --- geometry --------------------------------------------------------------

InsGeometry InsGeometry::from_parts(Eigen::MatrixXd centroids, Eigen::MatrixXd covariance,
                                    Eigen::MatrixXd gradient_centroids, double lambda) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != centroids.cols()) {
    throw Error(ErrorCode::DimMismatch, "covariance must be D x D matching the centroids");
  }
  InsGeometry g;
  g.centroids_ = std::move(centroids);
  g.covariance_ = std::move(covariance);
  g.gradient_centroids_ = std::move(gradient_centroids);
  g.lambda_ = lambda;
  g.llt_.compute(g.covariance_);
  if (g.llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, "Cholesky factorization failed");
  }
  g.whitened_centroids_ = g.llt_.matrixL().solve(g.centroids_.transpose()).transpose();
  return g;
}

double InsGeometry::min_euclidean(const Eigen::VectorXd& phi) const {
  if (phi.size() != centroids_.cols()) throw Error(ErrorCode::DimMismatch, "feature dim vs centroids");
  return std::sqrt((centroids_.rowwise() - phi.transpose()).rowwise().squaredNorm().minCoeff());
}

double InsGeometry::min_mahalanobis(const Eigen::VectorXd& phi) const {
  if (phi.size() != centroids_.cols()) throw Error(ErrorCode::DimMismatch, "feature dim vs centroids");
  const Eigen::VectorXd y = llt_.matrixL().solve(phi);
  return (whitened_centroids_.rowwise() - y.transpose()).rowwise().squaredNorm().minCoeff();
}

double InsGeometry::min_gradient_distance(const Eigen::VectorXd& g) const {
  if (g.size() != gradient_centroids_.cols() || gradient_centroids_.rows() == 0) {
    throw Error(ErrorCode::DimMismatch, "gradient dim vs gradient centroids");
  }
  return std::sqrt((gradient_centroids_.rowwise() - g.transpose()).rowwise().squaredNorm().minCoeff());
}

InsGeometry fit_geometry(const SoftmaxClassifier& model, const Eigen::MatrixXd& features,
                         std::span<const std::size_t> labels) {
  const auto k = static_cast<Eigen::Index>(model.num_classes());
  const Eigen::Index d = features.cols();
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw Error(ErrorCode::DimMismatch, "features vs labels");
  if (d != static_cast<Eigen::Index>(model.dim())) throw Error(ErrorCode::DimMismatch, "features vs model dim");

  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(k, d);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = labels[static_cast<std::size_t>(i)];
    if (c >= static_cast<std::size_t>(k)) throw Error(ErrorCode::DimMismatch, "label out of range");
    ++counts[c];
    const Eigen::VectorXd x = features.row(i).transpose();
    mu.row(static_cast<Eigen::Index>(c)) += x.transpose();
    gamma.row(static_cast<Eigen::Index>(c)) += model.input_gradient(x, c).transpose();
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto cnt = counts[static_cast<std::size_t>(c)];
    if (cnt < 2) {
      throw Error(ErrorCode::SingletonIntent, "intent '" + model.intent_names()[static_cast<std::size_t>(c)] +
                                                  "' has " + std::to_string(cnt) + " example(s)");
    }
    mu.row(c) /= static_cast<double>(cnt);
    gamma.row(c) /= static_cast<double>(cnt);
  }

  Eigen::MatrixXd centered(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered.row(i) = features.row(i) - mu.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]));
  }
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
  sigma.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  sigma = sigma.selfadjointView<Eigen::Lower>();
  sigma /= static_cast<double>(n);

  const double trace = sigma.trace();
  const double lambda = trace > 0.0 ? 1e-3 * trace / static_cast<double>(d) : 1e-6;
  sigma.diagonal().array() += lambda;
  return InsGeometry::from_parts(std::move(mu), std::move(sigma), std::move(gamma), lambda);
}

InsGeometry fit_geometry(const SoftmaxClassifier& model, std::span<const Dialogue> ins_data,
                         const Featurizer& features, unsigned threads) {
  std::vector<Dialogue> rows;
  for (const auto& d : ins_data) {
    if (d.label.is_ins()) rows.push_back(d);
  }
  std::sort(rows.begin(), rows.end(), [](const Dialogue& a, const Dialogue& b) { return a.id < b.id; });
  std::vector<std::size_t> labels;
  labels.reserve(rows.size());
  for (const auto& d : rows) labels.push_back(model.intent_index(d.label.intent));
  return fit_geometry(model, features.matrix(rows, threads), labels);
}

// --- scorers ---------------------------------------------------------------

double score_maxprob(const SoftmaxClassifier& model, const Eigen::VectorXd& phi) {
  return 1.0 - model.predict_proba(phi).maxCoeff();
}

double score_odin(const SoftmaxClassifier& model, const Eigen::VectorXd& phi, double temperature, double epsilon) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidConfig, "ODIN temperature must be > 0");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidConfig, "ODIN epsilon must be >= 0");
  Eigen::VectorXd perturbed = phi;
  if (epsilon > 0.0) {
    const Eigen::VectorXd g = model.input_gradient(phi, model.predict(phi));
    perturbed -= epsilon * g.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
  }
  return 1.0 - softmax(model.logits(perturbed) / temperature).maxCoeff();
}

double score_entropy(const SoftmaxClassifier& model, const Eigen::VectorXd& phi) {
  const Eigen::VectorXd p = model.predict_proba(phi);
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

double score_centroid(const InsGeometry& geometry, const Eigen::VectorXd& phi) {
  return geometry.min_euclidean(phi);
}

double score_mahalanobis(const InsGeometry& geometry, const Eigen::VectorXd& phi) {
  return geometry.min_mahalanobis(phi);
}

double score_gradient(const SoftmaxClassifier& model, const InsGeometry& geometry, const Eigen::VectorXd& phi) {
  return geometry.min_gradient_distance(model.input_gradient(phi, model.predict(phi)));
}

DetectorVerdict dropout_verdict(std::span<const std::size_t> predictions) {
  if (predictions.empty()) throw Error(ErrorCode::InvalidConfig, "dropout needs at least one pass");
  std::map<std::size_t, std::size_t> tally;
  std::size_t modal = 0;
  for (const auto p : predictions) modal = std::max(modal, ++tally[p]);
  const std::size_t passes = predictions.size();
  DetectorVerdict v;
  v.detector = std::string(to_string(DetectorKind::Dropout));
  v.score = 1.0 - static_cast<double>(modal) / static_cast<double>(passes);
  v.threshold = std::numeric_limits<double>::quiet_NaN();
  v.vote = !(2 * modal > passes);
  return v;
}

DetectorVerdict vote_dropout(const SoftmaxClassifier& model, const Eigen::VectorXd& phi, double rate,
                             std::size_t passes, std::uint64_t rng_seed) {
  const auto preds = model.predict_with_dropout(phi, rate, passes, rng_seed);
  return dropout_verdict(preds);
}

// --- thresholds ------------------------------------------------------------

ThresholdObjective objective_from_string(std::string_view name) {
  if (name == "f1") return ThresholdObjective::F1;
  if (name == "youden") return ThresholdObjective::Youden;
  throw Error(ErrorCode::InvalidConfig, "unknown threshold objective '" + std::string(name) + "'");
}

std::string_view to_string(ThresholdObjective o) noexcept { return o == ThresholdObjective::F1 ? "f1" : "youden"; }

namespace {

double objective_from_counts(std::size_t tp, std::size_t fp, std::size_t pos, std::size_t neg,
                             ThresholdObjective objective) {
  if (objective == ThresholdObjective::F1) {
    const std::size_t fn = pos - tp;
    return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return static_cast<double>(tp) / static_cast<double>(pos) - static_cast<double>(fp) / static_cast<double>(neg);
}

}  // namespace

double threshold_objective(std::span<const ScoredLabel> scores, double threshold, ThresholdObjective objective) {
  std::size_t tp = 0, fp = 0, pos = 0, neg = 0;
  for (const auto& s : scores) {
    (s.is_oos ? pos : neg) += 1;
    if (s.score > threshold) (s.is_oos ? tp : fp) += 1;
  }
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClassScores, "threshold objective needs both classes");
  return objective_from_counts(tp, fp, pos, neg, objective);
}

ThresholdChoice tune_threshold(std::span<const ScoredLabel> scores, ThresholdObjective objective) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw Error(ErrorCode::InvalidConfig, "non-finite score");
    (s.is_oos ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClassScores, "threshold tuning needs both classes");

  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });

  constexpr double inf = std::numeric_limits<double>::infinity();
  // Threshold -inf: everything votes OOS.
  std::size_t tp = pos, fp = neg;
  ThresholdChoice best{-inf, objective_from_counts(tp, fp, pos, neg, objective), true};
  std::size_t distinct = 1;
  std::size_t i = 0;
  while (i < sorted.size()) {
    // Move the group sharing sorted[i].score below the threshold.
    const double s = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == s) {
      (sorted[i].is_oos ? tp : fp) -= 1;
      ++i;
    }
    double t = inf;
    if (i < sorted.size()) {
      t = s + (sorted[i].score - s) / 2.0;
      ++distinct;
    }
    const double value = objective_from_counts(tp, fp, pos, neg, objective);
    if (value > best.objective) best = {t, value, false};
  }
  best.degenerate = distinct < 2;
  return best;
}

// --- suite -----------------------------------------------------------------

DetectorSuite::DetectorSuite(const SoftmaxClassifier& model, const InsGeometry& geometry, DetectorParams params)
    : model_(&model), geometry_(&geometry), params_(params) {}

double DetectorSuite::score(DetectorKind kind, const Eigen::VectorXd& phi, std::uint64_t salt) const {
  switch (kind) {
    case DetectorKind::MaxProb: return score_maxprob(*model_, phi);
    case DetectorKind::Odin: return score_odin(*model_, phi, params_.odin_temperature, params_.odin_epsilon);
    case DetectorKind::Entropy: return score_entropy(*model_, phi);
    case DetectorKind::Centroid: return score_centroid(*geometry_, phi);
    case DetectorKind::Mahalanobis: return score_mahalanobis(*geometry_, phi);
    case DetectorKind::Gradient: return score_gradient(*model_, *geometry_, phi);
    case DetectorKind::Dropout:
      return vote_dropout(*model_, phi, params_.dropout_rate, params_.dropout_passes,
                          fnv1a64(salt, fnv1a64(params_.dropout_seed, 0xcbf29ce484222325ULL)))
          .score;
  }
  return 0.0;
}

DetectorVerdict DetectorSuite::verdict(DetectorKind kind, const Eigen::VectorXd& phi, double threshold,
                                       std::uint64_t salt) const {
  if (kind == DetectorKind::Dropout) {
    return vote_dropout(*model_, phi, params_.dropout_rate, params_.dropout_passes,
                        fnv1a64(salt, fnv1a64(params_.dropout_seed, 0xcbf29ce484222325ULL)));
  }
  DetectorVerdict v;
  v.detector = std::string(to_string(kind));
  v.score = score(kind, phi, salt);
  v.threshold = threshold;
  v.vote = v.score > threshold;
  return v;
}

json threshold_to_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  if (std::isnan(t)) return nullptr;
  return t;
}

double threshold_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::MalformedRecord, "bad threshold '" + s + "'");
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

void write_score_dump(const std::filesystem::path& path, std::span<const ScoreRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& r : records) {
    out << json{{"id", r.id}, {"detector", r.detector}, {"score", r.score}, {"vote", r.vote}}.dump() << '\n';
  }
}

}  // namespace gold
