#include "gold/oos_model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "gold/error.hpp"

namespace gold {

using nlohmann::json;

json DirectOptions::to_json() const {
  json j = {{"pseudo_weight", pseudo_weight}};
  j["class_weighting"] = class_weighting ? json(*class_weighting) : json("inverse_frequency");
  return j;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

BinaryDetector::BinaryDetector(Eigen::VectorXd weights, double bias, double class_weighting, json feature_config,
                               std::string train_config_digest)
    : weights_(std::move(weights)),
      bias_(bias),
      class_weighting_(class_weighting),
      feature_config_(std::move(feature_config)),
      train_config_digest_(std::move(train_config_digest)) {
  if (!weights_.allFinite() || !std::isfinite(bias_)) {
    throw Error(ErrorCode::NonFiniteLoss, "detector parameters are not finite");
  }
  if (!(class_weighting_ > 0.0)) throw Error(ErrorCode::InvalidConfig, "class_weighting must be positive");
}

double BinaryDetector::logit(const Eigen::VectorXd& phi) const {
  if (phi.size() != weights_.size()) {
    throw Error(ErrorCode::DimMismatch,
                "feature dim " + std::to_string(phi.size()) + " vs detector dim " + std::to_string(weights_.size()));
  }
  return weights_.dot(phi) + bias_;
}

double BinaryDetector::score(const Eigen::VectorXd& phi) const { return sigmoid(logit(phi)); }

json BinaryDetector::to_json() const {
  return {{"format_version", kFormat},
          {"dim", dim()},
          {"weights", std::vector<double>(weights_.data(), weights_.data() + weights_.size())},
          {"bias", bias_},
          {"class_weighting", class_weighting_},
          {"feature_config", feature_config_},
          {"train_config_digest", train_config_digest_}};
}

BinaryDetector BinaryDetector::from_json(const json& j) {
  if (j.value("format_version", std::string()) != kFormat) {
    throw Error(ErrorCode::MalformedRecord, "not a binary detector document");
  }
  const auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != j.at("dim").get<std::size_t>()) throw Error(ErrorCode::DimMismatch, "weights length");
  return {Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
          j.at("bias").get<double>(), j.at("class_weighting").get<double>(), j.value("feature_config", json()),
          j.value("train_config_digest", std::string())};
}

namespace {

double weighted_loss(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x, std::span<const bool> y,
                     std::span<const double> weights, double weight_sum, double l2) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double z = x.row(i).dot(w) + b;
    // log(1 + e^z) - y z, computed stably.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += weights[static_cast<std::size_t>(i)] * (softplus - (y[static_cast<std::size_t>(i)] ? z : 0.0));
  }
  return total / weight_sum + 0.5 * l2 * w.squaredNorm();
}

}  // namespace

BinaryDetector train_binary(const Eigen::MatrixXd& features, std::span<const bool> is_oos,
                            std::span<const double> weights, const TrainConfig& cfg, TrainReport* report) {
  cfg.validate();
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != is_oos.size() || is_oos.size() != weights.size() || n == 0) {
    throw Error(ErrorCode::InvalidConfig, "features, labels and weights disagree or are empty");
  }
  const auto positives = std::count(is_oos.begin(), is_oos.end(), true);
  if (positives == 0 || positives == n) throw Error(ErrorCode::SingleClass, "direct training needs INS and OOS");
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double mean_weight = weight_sum / static_cast<double>(n);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(features.cols());
  double b = 0.0;
  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep = TrainReport{};
  rep.initial_loss = weighted_loss(w, b, features, is_oos, weights, weight_sum, cfg.l2_penalty);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.rng_seed);
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  Eigen::VectorXd grad(features.cols());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index rows = std::min(batch, n - start);
      grad.setZero();
      double grad_b = 0.0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto i = order[static_cast<std::size_t>(start + r)];
        const auto ui = static_cast<std::size_t>(i);
        const double residual = weights[ui] * (sigmoid(features.row(i).dot(w) + b) - (is_oos[ui] ? 1.0 : 0.0));
        grad += residual * features.row(i).transpose();
        grad_b += residual;
      }
      const double scale = cfg.learning_rate / (static_cast<double>(rows) * mean_weight);
      w -= scale * grad + cfg.learning_rate * cfg.l2_penalty * w;
      b -= scale * grad_b;
    }
    const double loss = weighted_loss(w, b, features, is_oos, weights, weight_sum, cfg.l2_penalty);
    if (!std::isfinite(loss) || !w.allFinite()) {
      throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch));
    }
    rep.train_losses.push_back(loss);
    rep.best_epoch = epoch;
  }
  BinaryDetector model(std::move(w), b, 1.0, json(), cfg.digest());
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((model.logit(features.row(i).transpose()) > 0.0) == is_oos[static_cast<std::size_t>(i)]) ++hits;
  }
  rep.train_accuracy = static_cast<double>(hits) / static_cast<double>(n);
  return model;
}

BinaryDetector train_direct(std::span<const Dialogue> data, const Featurizer& featurizer, const TrainConfig& cfg,
                            const DirectOptions& options, TrainReport* report, unsigned threads) {
  std::vector<Dialogue> rows;
  for (const auto& d : data) {
    if (d.label.kind != LabelKind::None) rows.push_back(d);
  }
  std::sort(rows.begin(), rows.end(), [](const Dialogue& a, const Dialogue& b) { return a.id < b.id; });
  const auto n_oos = static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const Dialogue& d) { return d.label.is_oos(); }));
  const std::size_t n_ins = rows.size() - n_oos;
  if (n_oos == 0 || n_ins == 0) throw Error(ErrorCode::SingleClass, "direct training needs INS and OOS");

  const double class_weight =
      options.class_weighting.value_or(static_cast<double>(n_ins) / static_cast<double>(n_oos));
  if (!(class_weight > 0.0)) throw Error(ErrorCode::InvalidConfig, "class_weighting must be positive");
  std::unique_ptr<bool[]> labels(new bool[rows.size()]);
  std::vector<double> weights(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool oos = rows[i].label.is_oos();
    labels[i] = oos;
    weights[i] = oos ? class_weight * (rows[i].label.pseudo ? options.pseudo_weight : 1.0) : 1.0;
  }
  const Eigen::MatrixXd x = featurizer.matrix(rows, threads);
  const BinaryDetector m = train_binary(x, std::span<const bool>(labels.get(), rows.size()), weights, cfg, report);
  return {m.weights(), m.bias(), class_weight, featurizer.descriptor(), cfg.digest()};
}

BinaryDetector train_oracle(const DatasetSplit& target, const Featurizer& features, const TrainConfig& cfg,
                            const DirectOptions& options, TrainReport* report, unsigned threads) {
  std::vector<Dialogue> rows;
  for (const auto& d : target.train) {
    if (d.label.kind == LabelKind::None) continue;
    Dialogue r = d;
    r.label.pseudo = false;
    rows.push_back(std::move(r));
  }
  return train_direct(rows, features, cfg, options, report, threads);
}

}  // namespace gold
