#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gold/corpus.hpp"
#include "gold/embedding.hpp"
#include "gold/intent_model.hpp"
#include "json.hpp"

namespace gold {

struct DirectOptions {
  std::optional<double> class_weighting;  // OOS example weight; default |INS| / |OOS|
  double pseudo_weight = 1.0;             // extra multiplier for pseudo-labeled OOS

  nlohmann::json to_json() const;
};

// Logistic head P(OOS | x) = sigmoid(w . phi + b).
class BinaryDetector {
 public:
  static constexpr const char* kFormat = "gold.binary_detector/1";

  BinaryDetector(Eigen::VectorXd weights, double bias, double class_weighting = 1.0,
                 nlohmann::json feature_config = {}, std::string train_config_digest = {});

  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  double class_weighting() const noexcept { return class_weighting_; }
  const nlohmann::json& feature_config() const noexcept { return feature_config_; }

  double logit(const Eigen::VectorXd& phi) const;
  double score(const Eigen::VectorXd& phi) const;

  nlohmann::json to_json() const;
  static BinaryDetector from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd weights_;
  double bias_ = 0.0;
  double class_weighting_ = 1.0;
  nlohmann::json feature_config_;
  std::string train_config_digest_;
};

double sigmoid(double z) noexcept;

// Weighted minibatch logistic regression. `weights` scales each row's loss.
BinaryDetector train_binary(const Eigen::MatrixXd& features, std::span<const bool> is_oos,
                            std::span<const double> weights, const TrainConfig& cfg, TrainReport* report = nullptr);

// Direct detector on an aggregated training set. Records are sorted by id
// before batching so storage order does not matter.
BinaryDetector train_direct(std::span<const Dialogue> data, const Featurizer& features, const TrainConfig& cfg,
                            const DirectOptions& options = {}, TrainReport* report = nullptr,
                            unsigned threads = 1);

// Upper-bound configuration: every labeled dialogue of the target train split,
// including all true OOS annotations.
BinaryDetector train_oracle(const DatasetSplit& target, const Featurizer& features, const TrainConfig& cfg,
                            const DirectOptions& options = {}, TrainReport* report = nullptr,
                            unsigned threads = 1);

}  // namespace gold
