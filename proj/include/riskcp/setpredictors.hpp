#pragma once

#include <limits>
#include <memory>

#include "riskcp/score_model.hpp"

namespace rcp {

/// The ceil((n+1)(1-alpha))-th smallest value; +infinity when that rank
/// exceeds n (the calibration set is too small for the requested level).
double conformal_quantile(std::vector<double> scores, double alpha);

/// Common interface for the comparison set predictors. Calibrate once, then
/// predict_set per instance; fitted predictors are immutable.
class SetPredictor {
 public:
  virtual ~SetPredictor() = default;
  virtual std::vector<std::size_t> predict_set(const Instance& x) const = 0;
  virtual double alpha() const = 0;
  virtual std::string method() const = 0;
};

/// Threshold on 1 - P(k|x) from the quantile of calibration scores
/// 1 - P(y_i|x_i).
std::unique_ptr<SetPredictor> naive_predictor(const ScoreModel& model, const Dataset& cal,
                                              double alpha);

/// Fixed-size sets: k* is the conformal quantile of the true label's 1-based
/// rank in the descending probability order (ties toward lower label index).
std::unique_ptr<SetPredictor> topk_predictor(const ScoreModel& model, const Dataset& cal,
                                             double alpha);

/// Regularized adaptive sets: calibration score is the cumulative sorted
/// probability mass down to the true label plus lambda * max(0, rank - k_reg);
/// prediction includes labels in descending-probability order while the
/// cumulative score stays within the threshold, always keeping the top-1.
/// randomized=false is the deterministic variant.
std::unique_ptr<SetPredictor> raps_predictor(const ScoreModel& model, const Dataset& cal,
                                             double alpha, double lambda = 0.01,
                                             std::size_t k_reg = 1, bool randomized = false);

/// Number of instances whose prediction set is a nonempty subset of the
/// target labels, i.e. decisively flagged as one of those classes.
std::size_t count_detected(const SetPredictor& pred, const Dataset& ds,
                           const std::vector<std::size_t>& target_labels);

/// Descending-probability label order with ties toward the lower index.
std::vector<std::size_t> probability_order(const std::vector<double>& probs);

}  // namespace rcp
