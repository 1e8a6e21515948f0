#include "gold/intent_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "gold/error.hpp"
#include "gold/text.hpp"

namespace gold {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
  }
  if (!(l2_penalty >= 0.0)) throw Error(ErrorCode::InvalidConfig, "l2_penalty must be >= 0");
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (early_stop_patience < 0) throw Error(ErrorCode::InvalidConfig, "early_stop_patience must be >= 0");
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"l2_penalty", l2_penalty},
          {"epochs", epochs},               {"batch_size", batch_size},
          {"rng_seed", rng_seed},           {"early_stop_patience", early_stop_patience}};
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const json& j, TrainConfig d) {
  d.learning_rate = j.value("learning_rate", d.learning_rate);
  d.l2_penalty = j.value("l2_penalty", d.l2_penalty);
  d.epochs = j.value("epochs", d.epochs);
  d.batch_size = j.value("batch_size", d.batch_size);
  d.rng_seed = j.value("rng_seed", d.rng_seed);
  d.early_stop_patience = j.value("early_stop_patience", d.early_stop_patience);
  return d;
}

std::string TrainConfig::digest() const { return hex64(fnv1a64(to_json().dump())); }

json TrainReport::to_json() const {
  return {{"initial_loss", initial_loss}, {"train_losses", train_losses}, {"dev_losses", dev_losses},
          {"best_epoch", best_epoch},     {"train_accuracy", train_accuracy}, {"dev_accuracy", dev_accuracy}};
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

namespace {

std::size_t argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<std::size_t>(best);
}

double accuracy(const SoftmaxClassifier& m, const Eigen::MatrixXd& x, std::span<const std::size_t> y) {
  if (y.empty()) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (m.predict(x.row(i).transpose()) == y[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

}  // namespace

SoftmaxClassifier::SoftmaxClassifier(Eigen::MatrixXd weights, Eigen::VectorXd bias,
                                     std::vector<std::string> intent_names, json feature_config,
                                     std::string train_config_digest)
    : weights_(std::move(weights)),
      bias_(std::move(bias)),
      intent_names_(std::move(intent_names)),
      feature_config_(std::move(feature_config)),
      train_config_digest_(std::move(train_config_digest)) {
  if (weights_.rows() < 2) throw Error(ErrorCode::SingleClass, "softmax classifier needs K >= 2");
  if (bias_.size() != weights_.rows() || intent_names_.size() != static_cast<std::size_t>(weights_.rows())) {
    throw Error(ErrorCode::DimMismatch, "weights, bias and intent names disagree on K");
  }
  if (!weights_.allFinite() || !bias_.allFinite()) {
    throw Error(ErrorCode::NonFiniteLoss, "classifier parameters are not finite");
  }
}

std::size_t SoftmaxClassifier::intent_index(const std::string& name) const {
  const auto it = std::find(intent_names_.begin(), intent_names_.end(), name);
  if (it == intent_names_.end()) throw Error(ErrorCode::MissingId, "intent " + name);
  return static_cast<std::size_t>(it - intent_names_.begin());
}

void SoftmaxClassifier::check_dim(const Eigen::VectorXd& phi) const {
  if (phi.size() != weights_.cols()) {
    throw Error(ErrorCode::DimMismatch,
                "feature dim " + std::to_string(phi.size()) + " vs model dim " + std::to_string(weights_.cols()));
  }
}

Eigen::VectorXd SoftmaxClassifier::logits(const Eigen::VectorXd& phi) const {
  check_dim(phi);
  return weights_ * phi + bias_;
}

Eigen::VectorXd SoftmaxClassifier::predict_proba(const Eigen::VectorXd& phi) const { return softmax(logits(phi)); }

std::size_t SoftmaxClassifier::predict(const Eigen::VectorXd& phi) const { return argmax(logits(phi)); }

Eigen::VectorXd SoftmaxClassifier::input_gradient(const Eigen::VectorXd& phi, std::size_t target) const {
  if (target >= num_classes()) throw Error(ErrorCode::DimMismatch, "target intent out of range");
  Eigen::VectorXd residual = predict_proba(phi);
  residual[static_cast<Eigen::Index>(target)] -= 1.0;
  return weights_.transpose() * residual;
}

std::vector<std::size_t> SoftmaxClassifier::predict_with_dropout(const Eigen::VectorXd& phi, double rate,
                                                                 std::size_t passes,
                                                                 std::uint64_t rng_seed) const {
  check_dim(phi);
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout rate must be in [0, 1)");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<std::size_t> out;
  out.reserve(passes);
  Eigen::VectorXd masked(phi.size());
  for (std::size_t p = 0; p < passes; ++p) {
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
      masked[j] = unit(rng) < rate ? 0.0 : phi[j] * keep_scale;
    }
    out.push_back(argmax(weights_ * masked + bias_));
  }
  return out;
}

json SoftmaxClassifier::to_json() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(weights_.size()));
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) flat.push_back(weights_(r, c));
  }
  return {{"format_version", kFormat},
          {"intent_names", intent_names_},
          {"dim", dim()},
          {"weights", std::move(flat)},
          {"bias", std::vector<double>(bias_.data(), bias_.data() + bias_.size())},
          {"feature_config", feature_config_},
          {"train_config_digest", train_config_digest_}};
}

SoftmaxClassifier SoftmaxClassifier::from_json(const json& j) {
  if (j.value("format_version", std::string()) != kFormat) {
    throw Error(ErrorCode::MalformedRecord, "not a softmax classifier document");
  }
  const auto names = j.at("intent_names").get<std::vector<std::string>>();
  const auto dim = j.at("dim").get<std::size_t>();
  const auto flat = j.at("weights").get<std::vector<double>>();
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (flat.size() != names.size() * dim) throw Error(ErrorCode::DimMismatch, "weights length");
  Eigen::MatrixXd w(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < names.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * dim + c];
    }
  }
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
  return {std::move(w), std::move(b), names, j.value("feature_config", json()),
          j.value("train_config_digest", std::string())};
}

double cross_entropy(const SoftmaxClassifier& m, const Eigen::MatrixXd& features,
                     std::span<const std::size_t> labels) {
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd z = m.logits(features.row(i).transpose());
    const double top = z.maxCoeff();
    const double lse = top + std::log((z.array() - top).exp().sum());
    total += lse - z[static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])];
  }
  return total / static_cast<double>(labels.size());
}

SoftmaxClassifier train_softmax(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                std::vector<std::string> intent_names, const TrainConfig& cfg,
                                const Eigen::MatrixXd* dev_features, std::span<const std::size_t> dev_labels,
                                TrainReport* report) {
  cfg.validate();
  const auto k = static_cast<Eigen::Index>(intent_names.size());
  if (k < 2) throw Error(ErrorCode::SingleClass, "need at least two intents");
  if (static_cast<std::size_t>(features.rows()) != labels.size() || labels.empty()) {
    throw Error(ErrorCode::InvalidConfig, "features and labels disagree or are empty");
  }
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  const bool use_dev = dev_features != nullptr && !dev_labels.empty() && cfg.early_stop_patience > 0;

  auto objective = [&](const SoftmaxClassifier& m) {
    return cross_entropy(m, features, labels) + 0.5 * cfg.l2_penalty * w.squaredNorm();
  };

  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep = TrainReport{};
  rep.initial_loss = objective(SoftmaxClassifier(w, b, intent_names));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.rng_seed);

  Eigen::MatrixXd best_w = w;
  Eigen::VectorXd best_b = b;
  double best_dev = std::numeric_limits<double>::infinity();
  int stale = 0;

  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  Eigen::MatrixXd xb;
  Eigen::MatrixXd residual;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index rows = std::min(batch, n - start);
      xb.resize(rows, d);
      for (Eigen::Index r = 0; r < rows; ++r) xb.row(r) = features.row(order[static_cast<std::size_t>(start + r)]);
      Eigen::MatrixXd z = (xb * w.transpose()).rowwise() + b.transpose();
      residual.resize(rows, k);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::VectorXd p = softmax(z.row(r).transpose());
        residual.row(r) = p.transpose();
        residual(r, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + r)])])) -= 1.0;
      }
      const double scale = cfg.learning_rate / static_cast<double>(rows);
      w -= scale * (residual.transpose() * xb) + cfg.learning_rate * cfg.l2_penalty * w;
      b -= scale * residual.colwise().sum().transpose();
    }
    if (!w.allFinite() || !b.allFinite()) {
      throw Error(ErrorCode::NonFiniteLoss, "parameters diverged at epoch " + std::to_string(epoch));
    }
    const SoftmaxClassifier current(w, b, intent_names);
    const double loss = objective(current);
    if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch));
    rep.train_losses.push_back(loss);

    if (use_dev) {
      const double dev_loss = cross_entropy(current, *dev_features, dev_labels);
      rep.dev_losses.push_back(dev_loss);
      if (dev_loss < best_dev) {
        best_dev = dev_loss;
        best_w = w;
        best_b = b;
        rep.best_epoch = epoch;
        stale = 0;
      } else if (++stale >= cfg.early_stop_patience) {
        break;
      }
    } else {
      best_w = w;
      best_b = b;
      rep.best_epoch = epoch;
    }
  }

  SoftmaxClassifier model(std::move(best_w), std::move(best_b), std::move(intent_names), json(), cfg.digest());
  rep.train_accuracy = accuracy(model, features, labels);
  if (dev_features != nullptr && !dev_labels.empty()) rep.dev_accuracy = accuracy(model, *dev_features, dev_labels);
  return model;
}

SoftmaxClassifier train_intent(std::span<const Dialogue> train, std::span<const Dialogue> dev,
                               const Featurizer& featurizer, const TrainConfig& cfg, TrainReport* report,
                               unsigned threads) {
  std::vector<Dialogue> rows;
  std::map<std::string, std::size_t> intents;
  for (const auto& d : train) {
    if (!d.label.is_ins()) throw Error(ErrorCode::InvalidConfig, "intent training data must be INS: " + d.id);
    rows.push_back(d);
    intents.emplace(d.label.intent, 0);
  }
  if (intents.size() < 2) throw Error(ErrorCode::SingleClass, "found " + std::to_string(intents.size()) + " intent(s)");
  std::vector<std::string> names;
  for (auto& [name, idx] : intents) {
    idx = names.size();
    names.push_back(name);
  }
  std::sort(rows.begin(), rows.end(), [](const Dialogue& a, const Dialogue& b) { return a.id < b.id; });
  std::vector<std::size_t> labels;
  for (const auto& d : rows) labels.push_back(intents.at(d.label.intent));
  const Eigen::MatrixXd x = featurizer.matrix(rows, threads);

  std::vector<Dialogue> dev_rows;
  std::vector<std::size_t> dev_labels;
  for (const auto& d : dev) {
    if (!d.label.is_ins()) continue;
    const auto it = intents.find(d.label.intent);
    if (it == intents.end()) continue;
    dev_rows.push_back(d);
  }
  std::sort(dev_rows.begin(), dev_rows.end(), [](const Dialogue& a, const Dialogue& b) { return a.id < b.id; });
  for (const auto& d : dev_rows) dev_labels.push_back(intents.at(d.label.intent));
  const Eigen::MatrixXd x_dev = featurizer.matrix(dev_rows, threads);

  SoftmaxClassifier m = train_softmax(x, labels, names, cfg, dev_rows.empty() ? nullptr : &x_dev, dev_labels, report);
  return SoftmaxClassifier(m.weights(), m.bias(), m.intent_names(), featurizer.descriptor(), cfg.digest());
}

}  // namespace gold
