#include "riskcp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskcp/error.hpp"
#include "riskcp/logistic.hpp"

namespace rcp {

double effective_coverage(const std::vector<PredictionRecord>& records,
                          const std::vector<std::size_t>& truths) {
  if (records.size() != truths.size()) {
    throw ValidationError("records/truths length mismatch");
  }
  if (records.empty()) throw ValidationError("coverage of an empty batch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].set_contains(truths[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double avg_set_size(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw ValidationError("set size of an empty batch");
  std::size_t total = 0;
  for (const auto& r : records) total += r.prediction_set.size();
  return static_cast<double>(total) / static_cast<double>(records.size());
}

SetConfusion set_confusion(const std::vector<PredictionRecord>& records,
                           const std::vector<std::size_t>& truths) {
  if (records.size() != truths.size()) {
    throw ValidationError("records/truths length mismatch");
  }
  SetConfusion c;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& set = records[i].prediction_set;
    if (set.empty()) {
      ++c.empty;
    } else if (set.size() >= 2) {
      ++c.inconclusive;
    } else if (set.front() == truths[i]) {
      ++c.correct_singleton;
    } else {
      ++c.incorrect_singleton;
    }
  }
  return c;
}

std::vector<SweepRow> alpha_sweep(const ScoreModel& model, const CalibrationTable& table,
                                  const Dataset& test, const std::vector<double>& alphas,
                                  bool smoothed, std::size_t threads) {
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ValidationError("alphas must be in (0,1)");
  }
  const std::size_t k_classes = table.class_count();
  std::vector<SweepRow> rows;
  rows.reserve(alphas.size());
  for (double a : alphas) {
    const auto records = predict_batch(model, table, test, a, smoothed, threads);
    SweepRow row;
    row.sig = a;
    row.mean_err = 1.0 - effective_coverage(records, test.labels);
    row.avg_c = avg_set_size(records);
    row.n_correct = 0;
    row.per_class_err.assign(k_classes, 0.0);
    row.per_class_avg_size.assign(k_classes, 0.0);
    std::vector<std::size_t> class_n(k_classes, 0);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::size_t y = test.labels[i];
      ++class_n[y];
      if (records[i].set_contains(y)) {
        ++row.n_correct;
      } else {
        row.per_class_err[y] += 1.0;
      }
      row.per_class_avg_size[y] += static_cast<double>(records[i].prediction_set.size());
    }
    for (std::size_t k = 0; k < k_classes; ++k) {
      if (class_n[k] > 0) {
        row.per_class_err[k] /= static_cast<double>(class_n[k]);
        row.per_class_avg_size[k] /= static_cast<double>(class_n[k]);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CoverageCheck coverage_guarantee_check(std::size_t n_trials, std::size_t n_cal,
                                       std::size_t n_test, double alpha, std::uint64_t seed,
                                       const std::vector<std::size_t>& class_weights) {
  if (n_trials == 0 || n_cal == 0 || n_test == 0) {
    throw ValidationError("trial and split sizes must be positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
  const std::size_t k_classes = class_weights.size();
  if (k_classes < 2) throw ValidationError("need at least 2 classes");

  // Fixed desk-scale task: unit Gaussians, d = 4, separation 2, modest
  // logistic fit. The guarantee only needs cal/test exchangeability, so the
  // trainer quality does not matter for validity.
  const std::size_t n_train = 300;
  const std::size_t d = 4;
  const double separation = 2.0;
  const double weight_total = static_cast<double>(
      std::accumulate(class_weights.begin(), class_weights.end(), std::size_t{0}));

  auto per_class = [&](std::size_t total) {
    std::vector<std::size_t> counts(k_classes, 0);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < k_classes; ++k) {
      counts[k] = static_cast<std::size_t>(std::floor(
          static_cast<double>(total) * static_cast<double>(class_weights[k]) / weight_total));
      counts[k] = std::max<std::size_t>(counts[k], 1);
      assigned += counts[k];
    }
    while (assigned < total) {
      ++counts[0];
      ++assigned;
    }
    return counts;
  };

  double covered = 0.0;
  std::vector<double> class_covered(k_classes, 0.0);
  std::vector<double> class_total(k_classes, 0.0);

  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const std::uint64_t trial_seed = seed ^ (0x9E3779B97F4A7C15ULL * (trial + 1));
    const Dataset train = synth_benchmark(per_class(n_train), d, separation, trial_seed);
    const Dataset cal = synth_benchmark(per_class(n_cal), d, separation, trial_seed + 1);
    const Dataset test = synth_benchmark(per_class(n_test), d, separation, trial_seed + 2);

    TrainConfig cfg;
    cfg.epochs = 120;
    cfg.learning_rate = 0.2;
    cfg.seed = trial_seed;
    const auto model = fit_logistic(train, cfg);
    const auto table = calibrate(*model, cal);
    const auto records = predict_batch(*model, table, test, alpha, /*smoothed=*/true);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const bool hit = records[i].set_contains(test.labels[i]);
      covered += hit ? 1.0 : 0.0;
      class_covered[test.labels[i]] += hit ? 1.0 : 0.0;
      class_total[test.labels[i]] += 1.0;
    }
  }

  CoverageCheck check;
  const double n_total = static_cast<double>(n_trials) * static_cast<double>(n_test);
  check.coverage = covered / n_total;
  check.bound = 1.0 - alpha - 2.0 * std::sqrt(alpha * (1.0 - alpha) / n_total);
  check.pass = check.coverage >= check.bound;
  check.per_class_coverage.assign(k_classes, 0.0);
  for (std::size_t k = 0; k < k_classes; ++k) {
    if (class_total[k] > 0) check.per_class_coverage[k] = class_covered[k] / class_total[k];
  }
  return check;
}

std::vector<RankedRecord> ranking(const std::vector<PredictionRecord>& records,
                                  const std::vector<std::size_t>& target_labels) {
  std::vector<RankedRecord> out;
  for (const auto& r : records) {
    if (r.rejected) continue;
    if (std::find(target_labels.begin(), target_labels.end(), r.point_prediction) ==
        target_labels.end()) {
      continue;
    }
    out.push_back({r.id, r.point_prediction, r.confidence, r.credibility});
  }
  std::sort(out.begin(), out.end(), [](const RankedRecord& a, const RankedRecord& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.credibility != b.credibility) return a.credibility > b.credibility;
    return a.id < b.id;
  });
  return out;
}

}  // namespace rcp
