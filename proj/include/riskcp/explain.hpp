#pragma once

#include "riskcp/conformal.hpp"

namespace rcp {

struct PerturbConfig {
  std::size_t perturbations = 200;  // P
  double sigma_scale = 0.1;         // noise scale as a multiple of feature stddev
  double kernel_width = 0.0;        // 0 = auto: 0.75 * sqrt(d), standardized units
  std::size_t top_j = 5;            // attributions kept per class
  std::uint64_t seed = 0;
};

/// One local linear surrogate: p-value of a class regressed on standardized
/// feature offsets around the instance under explanation.
struct SurrogateFit {
  Vec weights;             // d, standardized-feature units
  double intercept = 0.0;
  double r2 = 0.0;         // weighted
};

struct Attribution {
  std::string feature;
  std::string label;
  double weight = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  // "toward" when a larger feature value pushes the class p-value up.
  std::string direction;
};

struct Explanation {
  std::string id;
  double alpha = 0.0;
  std::vector<double> p_values;
  std::vector<Attribution> attributions;  // top-J per class
  std::vector<double> surrogate_r2;       // per class
};

/// P Gaussian perturbations of x with per-feature scale
/// sigma_scale * stddev_j. Deterministic per seed.
std::vector<Instance> perturb(const Instance& x, const Vec& feature_stddev,
                              const PerturbConfig& cfg);

/// Weighted least squares of each class's p-value against standardized
/// feature offsets; weights exp(-dist^2 / width^2) in the standardized
/// metric. Needs at least d + 2 perturbations. Singular systems fall back to
/// a 1e-6 ridge.
std::vector<SurrogateFit> local_surrogate(const std::vector<Instance>& perturbed,
                                          const std::vector<std::vector<double>>& pvals,
                                          const Instance& x, const Vec& feature_stddev,
                                          const PerturbConfig& cfg);

/// Split-conformal reliability intervals for the surrogate weights: refit on
/// the first half of the perturbations, take the conformal quantile of the
/// second half's absolute residuals, and translate that band to each
/// coefficient through its local feature spread; widths also absorb the
/// half-refit coefficient drift so the interval always contains the reported
/// weight. Needs at least 40 perturbations.
std::vector<std::vector<std::pair<double, double>>> calibrate_attributions(
    const std::vector<Instance>& perturbed, const std::vector<std::vector<double>>& pvals,
    const std::vector<SurrogateFit>& surrogate, const Instance& x, const Vec& feature_stddev,
    const PerturbConfig& cfg, double alpha);

/// Full pipeline for a rejected (empty-set) prediction: perturb, re-score
/// p-values through the calibration table, fit per-class surrogates of the
/// p-values, and calibrate the attributions. Throws "not a rejection" if the
/// instance's prediction set at alpha is nonempty.
Explanation explain_reject(const ScoreModel& model, const CalibrationTable& table,
                           const Instance& x, double alpha, const PerturbConfig& cfg,
                           const Vec& feature_stddev,
                           const std::vector<std::string>& feature_names,
                           bool smoothed = false);

nlohmann::json explanation_to_json(const Explanation& e);

}  // namespace rcp
