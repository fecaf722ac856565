#pragma once

#include <cstdint>

#include "riskcp/score_model.hpp"

namespace rcp {

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double l2 = 1e-4;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
};

/// Multinomial logistic regression with the standardizer baked in, so
/// calibration and test data go through exactly the training transform.
class LogisticModel : public ScoreModel {
 public:
  LogisticModel(LabelSet labels, std::vector<std::string> feature_names, Mat weights,
                Vec bias, Standardizer standardizer, TrainConfig config);

  std::size_t num_classes() const override { return weights_.rows; }
  std::vector<double> predict_proba(const Instance& x) const override;
  nlohmann::json to_json() const override;
  const LabelSet& label_set() const override { return labels_; }

  const Mat& weights() const { return weights_; }
  const Vec& bias() const { return bias_; }
  const Standardizer& standardizer() const { return standardizer_; }

  static std::unique_ptr<LogisticModel> from_json(const nlohmann::json& doc);

 private:
  LabelSet labels_;
  std::vector<std::string> feature_names_;
  Mat weights_;  // K x d
  Vec bias_;     // K
  Standardizer standardizer_;
  TrainConfig config_;
};

/// Gradient-descent fit (full batch by default). Throws ValidationError when a
/// class is absent from the training data or the loss turns non-finite (the
/// message carries the epoch index).
std::unique_ptr<LogisticModel> fit_logistic(const Dataset& train, const TrainConfig& cfg);

/// Bagged variant: T members fitted on bootstrap resamples, probabilities
/// averaged. Plugs into the same conformal machinery as any ScoreModel.
std::unique_ptr<ScoreModel> fit_logistic_ensemble(const Dataset& train,
                                                  const TrainConfig& cfg, std::size_t members);

namespace detail {

/// Softmax cross-entropy loss and its gradient for a flat parameter vector
/// [W row-major | b] over standardized features. Exposed for the
/// finite-difference checks in the test suite.
double logistic_loss(const Mat& x, const std::vector<std::size_t>& y, std::size_t k_classes,
                     const Vec& params, double l2);
Vec logistic_grad(const Mat& x, const std::vector<std::size_t>& y, std::size_t k_classes,
                  const Vec& params, double l2);
Vec softmax(Vec logits);

}  // namespace detail

}  // namespace rcp
