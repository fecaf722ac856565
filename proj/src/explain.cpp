#include "riskcp/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskcp/error.hpp"
#include "riskcp/rng.hpp"
#include "riskcp/setpredictors.hpp"

namespace rcp {

namespace {

double resolved_width(const PerturbConfig& cfg, std::size_t d) {
  return cfg.kernel_width > 0.0 ? cfg.kernel_width
                                : 0.75 * std::sqrt(static_cast<double>(d));
}

// Standardized offsets of the perturbations around x.
std::vector<Vec> offsets(const std::vector<Instance>& perturbed, const Instance& x,
                         const Vec& stddev) {
  std::vector<Vec> z(perturbed.size(), Vec(x.features.size()));
  for (std::size_t i = 0; i < perturbed.size(); ++i) {
    for (std::size_t j = 0; j < x.features.size(); ++j) {
      z[i][j] = (perturbed[i].features[j] - x.features[j]) / stddev[j];
    }
  }
  return z;
}

Vec kernel_weights(const std::vector<Vec>& z, double width) {
  Vec w(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    double d2 = 0.0;
    for (double v : z[i]) d2 += v * v;
    w[i] = std::exp(-d2 / (width * width));
  }
  return w;
}

// Weighted least squares of y on [1 | z] (intercept first). Falls back to a
// 1e-6 ridge when the normal equations are singular.
SurrogateFit fit_wls(const std::vector<Vec>& z, const Vec& y, const Vec& w,
                     const std::vector<std::size_t>& rows) {
  const std::size_t d = z.front().size();
  const std::size_t p = d + 1;
  Mat a(p, p);
  Vec rhs(p, 0.0);
  for (std::size_t i : rows) {
    Vec basis(p);
    basis[0] = 1.0;
    for (std::size_t j = 0; j < d; ++j) basis[j + 1] = z[i][j];
    for (std::size_t r = 0; r < p; ++r) {
      rhs[r] += w[i] * y[i] * basis[r];
      for (std::size_t c = 0; c < p; ++c) a(r, c) += w[i] * basis[r] * basis[c];
    }
  }
  Vec beta;
  if (!solve_linear(a, rhs, beta)) {
    for (std::size_t i = 0; i < p; ++i) a(i, i) += 1e-6;
    if (!solve_linear(a, rhs, beta)) {
      throw ValidationError("surrogate normal equations are singular");
    }
  }

  SurrogateFit fit;
  fit.intercept = beta[0];
  fit.weights.assign(beta.begin() + 1, beta.end());

  double w_sum = 0.0, y_mean = 0.0;
  for (std::size_t i : rows) {
    w_sum += w[i];
    y_mean += w[i] * y[i];
  }
  y_mean /= w_sum;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i : rows) {
    double pred = fit.intercept;
    for (std::size_t j = 0; j < d; ++j) pred += fit.weights[j] * z[i][j];
    ss_res += w[i] * (y[i] - pred) * (y[i] - pred);
    ss_tot += w[i] * (y[i] - y_mean) * (y[i] - y_mean);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

void check_stddev(const Vec& stddev) {
  for (double s : stddev) {
    if (!(s > 0.0)) throw ValidationError("feature stddevs must be positive");
  }
}

}  // namespace

std::vector<Instance> perturb(const Instance& x, const Vec& feature_stddev,
                              const PerturbConfig& cfg) {
  check_stddev(feature_stddev);
  if (cfg.perturbations < 20) throw ValidationError("need at least 20 perturbations");
  if (feature_stddev.size() != x.features.size()) {
    throw ValidationError("stddev vector length mismatch");
  }
  RngStream rng(cfg.seed, 0);
  std::vector<Instance> out;
  out.reserve(cfg.perturbations);
  for (std::size_t i = 0; i < cfg.perturbations; ++i) {
    Instance inst;
    inst.id = x.id + "-p" + std::to_string(i + 1);
    inst.features = x.features;
    for (std::size_t j = 0; j < inst.features.size(); ++j) {
      inst.features[j] += cfg.sigma_scale * feature_stddev[j] * rng.next_gaussian();
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<SurrogateFit> local_surrogate(const std::vector<Instance>& perturbed,
                                          const std::vector<std::vector<double>>& pvals,
                                          const Instance& x, const Vec& feature_stddev,
                                          const PerturbConfig& cfg) {
  check_stddev(feature_stddev);
  if (perturbed.size() != pvals.size()) {
    throw ValidationError("perturbations/p-values length mismatch");
  }
  const std::size_t d = x.features.size();
  if (perturbed.size() < d + 2) {
    throw ValidationError("need at least d + 2 = " + std::to_string(d + 2) +
                          " perturbations, got " + std::to_string(perturbed.size()));
  }
  const auto z = offsets(perturbed, x, feature_stddev);
  const Vec w = kernel_weights(z, resolved_width(cfg, d));
  std::vector<std::size_t> all(perturbed.size());
  std::iota(all.begin(), all.end(), 0);

  const std::size_t k_classes = pvals.front().size();
  std::vector<SurrogateFit> fits;
  fits.reserve(k_classes);
  for (std::size_t k = 0; k < k_classes; ++k) {
    Vec y(perturbed.size());
    for (std::size_t i = 0; i < perturbed.size(); ++i) y[i] = pvals[i][k];
    fits.push_back(fit_wls(z, y, w, all));
  }
  return fits;
}

std::vector<std::vector<std::pair<double, double>>> calibrate_attributions(
    const std::vector<Instance>& perturbed, const std::vector<std::vector<double>>& pvals,
    const std::vector<SurrogateFit>& surrogate, const Instance& x, const Vec& feature_stddev,
    const PerturbConfig& cfg, double alpha) {
  if (perturbed.size() < 40) {
    throw ValidationError("need at least 40 perturbations to split-calibrate, got " +
                          std::to_string(perturbed.size()));
  }
  if (perturbed.size() != pvals.size()) {
    throw ValidationError("perturbations/p-values length mismatch");
  }
  const std::size_t d = x.features.size();
  const auto z = offsets(perturbed, x, feature_stddev);
  const Vec w = kernel_weights(z, resolved_width(cfg, d));

  const std::size_t half = perturbed.size() / 2;
  std::vector<std::size_t> fit_half(half), cal_half(perturbed.size() - half);
  std::iota(fit_half.begin(), fit_half.end(), 0);
  std::iota(cal_half.begin(), cal_half.end(), half);

  // Per-feature local spread on the calibration half: a coefficient change
  // of delta moves predictions by about delta * rms_j, so the calibrated
  // residual band q translates to a coefficient band q / rms_j.
  Vec rms(d, 0.0);
  double w_sum = 0.0;
  for (std::size_t i : cal_half) {
    w_sum += w[i];
    for (std::size_t j = 0; j < d; ++j) rms[j] += w[i] * z[i][j] * z[i][j];
  }
  for (std::size_t j = 0; j < d; ++j) rms[j] = std::max(std::sqrt(rms[j] / w_sum), 1e-12);

  const std::size_t k_classes = surrogate.size();
  std::vector<std::vector<std::pair<double, double>>> intervals(
      k_classes, std::vector<std::pair<double, double>>(d));

  for (std::size_t k = 0; k < k_classes; ++k) {
    Vec y(perturbed.size());
    for (std::size_t i = 0; i < perturbed.size(); ++i) y[i] = pvals[i][k];
    const SurrogateFit refit = fit_wls(z, y, w, fit_half);

    std::vector<double> residuals;
    residuals.reserve(cal_half.size());
    for (std::size_t i : cal_half) {
      double pred = refit.intercept;
      for (std::size_t j = 0; j < d; ++j) pred += refit.weights[j] * z[i][j];
      residuals.push_back(std::fabs(y[i] - pred));
    }
    const double q = conformal_quantile(std::move(residuals), alpha);

    for (std::size_t j = 0; j < d; ++j) {
      const double drift = std::fabs(surrogate[k].weights[j] - refit.weights[j]);
      const double width = std::max(q / rms[j], drift);
      intervals[k][j] = {surrogate[k].weights[j] - width, surrogate[k].weights[j] + width};
    }
  }
  return intervals;
}

Explanation explain_reject(const ScoreModel& model, const CalibrationTable& table,
                           const Instance& x, double alpha, const PerturbConfig& cfg,
                           const Vec& feature_stddev,
                           const std::vector<std::string>& feature_names, bool smoothed) {
  const PredictionRecord rec = predict(model, table, x, alpha, smoothed);
  if (!rec.rejected) {
    throw ValidationError("not a rejection: instance " + x.id + " has a nonempty set at alpha " +
                          std::to_string(alpha));
  }

  const auto perturbed = perturb(x, feature_stddev, cfg);
  std::vector<std::vector<double>> pvals;
  pvals.reserve(perturbed.size());
  for (const auto& inst : perturbed) {
    const auto probs = model.predict_proba(inst);
    std::vector<double> p(table.class_count());
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = p_value(table, table.nonconformity.score(probs, k), k, smoothed);
    }
    pvals.push_back(std::move(p));
  }

  const auto surrogates = local_surrogate(perturbed, pvals, x, feature_stddev, cfg);
  const auto intervals =
      calibrate_attributions(perturbed, pvals, surrogates, x, feature_stddev, cfg, alpha);

  Explanation e;
  e.id = x.id;
  e.alpha = alpha;
  e.p_values = rec.p_values;
  const std::size_t d = x.features.size();
  for (std::size_t k = 0; k < surrogates.size(); ++k) {
    e.surrogate_r2.push_back(surrogates[k].r2);
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::fabs(surrogates[k].weights[a]) > std::fabs(surrogates[k].weights[b]);
    });
    const std::size_t keep = std::min(cfg.top_j, d);
    for (std::size_t r = 0; r < keep; ++r) {
      const std::size_t j = order[r];
      Attribution attr;
      attr.feature = j < feature_names.size() ? feature_names[j] : "f" + std::to_string(j + 1);
      attr.label = model.label_set().name(k);
      attr.weight = surrogates[k].weights[j];
      attr.lo = intervals[k][j].first;
      attr.hi = intervals[k][j].second;
      attr.direction = attr.weight >= 0.0 ? "toward" : "away";
      e.attributions.push_back(std::move(attr));
    }
  }
  return e;
}

nlohmann::json explanation_to_json(const Explanation& e) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : e.attributions) {
    attrs.push_back({{"feature", a.feature},
                     {"class", a.label},
                     {"weight", a.weight},
                     {"lo", a.lo},
                     {"hi", a.hi},
                     {"direction", a.direction}});
  }
  return nlohmann::json{{"id", e.id},
                        {"alpha", e.alpha},
                        {"p_values", e.p_values},
                        {"attributions", attrs},
                        {"diagnostics", {{"surrogate_r2", e.surrogate_r2}}}};
}

}  // namespace rcp
