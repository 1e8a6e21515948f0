#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gold/corpus.hpp"
#include "gold/embedding.hpp"
#include "json.hpp"

namespace gold {

struct TrainConfig {
  double learning_rate = 0.05;
  double l2_penalty = 1e-4;
  int epochs = 60;
  int batch_size = 32;
  std::uint64_t rng_seed = 0;
  int early_stop_patience = 5;  // epochs without dev improvement; 0 disables

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig defaults);
  std::string digest() const;
};

struct TrainReport {
  double initial_loss = 0.0;
  std::vector<double> train_losses;  // objective after each epoch
  std::vector<double> dev_losses;
  int best_epoch = 0;
  double train_accuracy = 0.0;
  double dev_accuracy = 0.0;

  nlohmann::json to_json() const;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Multinomial logistic regression over dialogue features: p = softmax(W phi + b).
class SoftmaxClassifier {
 public:
  static constexpr const char* kFormat = "gold.softmax_classifier/1";

  SoftmaxClassifier(Eigen::MatrixXd weights, Eigen::VectorXd bias, std::vector<std::string> intent_names,
                    nlohmann::json feature_config = {}, std::string train_config_digest = {});

  std::size_t num_classes() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.cols()); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& bias() const noexcept { return bias_; }
  const std::vector<std::string>& intent_names() const noexcept { return intent_names_; }
  const nlohmann::json& feature_config() const noexcept { return feature_config_; }
  std::size_t intent_index(const std::string& name) const;

  Eigen::VectorXd logits(const Eigen::VectorXd& phi) const;
  Eigen::VectorXd predict_proba(const Eigen::VectorXd& phi) const;
  std::size_t predict(const Eigen::VectorXd& phi) const;

  // Gradient of -log p_target with respect to phi: W^T (p - e_target).
  Eigen::VectorXd input_gradient(const Eigen::VectorXd& phi, std::size_t target) const;

  // Argmax intent of `passes` forward passes, each with an inverted-dropout
  // mask over the feature components.
  std::vector<std::size_t> predict_with_dropout(const Eigen::VectorXd& phi, double rate, std::size_t passes,
                                                std::uint64_t rng_seed) const;

  nlohmann::json to_json() const;
  static SoftmaxClassifier from_json(const nlohmann::json& j);

 private:
  void check_dim(const Eigen::VectorXd& phi) const;

  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  std::vector<std::string> intent_names_;
  nlohmann::json feature_config_;
  std::string train_config_digest_;
};

// Mean cross-entropy of labels under the model (no penalty term).
double cross_entropy(const SoftmaxClassifier& m, const Eigen::MatrixXd& features, std::span<const std::size_t> labels);

// Minibatch gradient descent on L2-regularized cross-entropy with early
// stopping on dev loss. Rows are visited in a per-epoch shuffle seeded from
// cfg.rng_seed.
SoftmaxClassifier train_softmax(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                std::vector<std::string> intent_names, const TrainConfig& cfg,
                                const Eigen::MatrixXd* dev_features = nullptr,
                                std::span<const std::size_t> dev_labels = {}, TrainReport* report = nullptr);

// Trains on INS dialogues (sorted by id first). Intents are indexed in
// lexicographic order; dev dialogues with unknown intents are skipped.
SoftmaxClassifier train_intent(std::span<const Dialogue> train, std::span<const Dialogue> dev,
                               const Featurizer& features, const TrainConfig& cfg, TrainReport* report = nullptr,
                               unsigned threads = 1);

}  // namespace gold
