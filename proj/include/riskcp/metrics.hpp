#pragma once

#include "riskcp/conformal.hpp"

namespace rcp {

/// Set-prediction confusion counts. The four buckets partition the batch:
/// correct singleton, incorrect singleton, inconclusive (two or more labels),
/// and empty (reject).
struct SetConfusion {
  std::size_t correct_singleton = 0;
  std::size_t incorrect_singleton = 0;
  std::size_t inconclusive = 0;
  std::size_t empty = 0;

  std::size_t total() const {
    return correct_singleton + incorrect_singleton + inconclusive + empty;
  }
};

/// Fraction of records whose prediction set contains the truth.
double effective_coverage(const std::vector<PredictionRecord>& records,
                          const std::vector<std::size_t>& truths);

/// Mean prediction-set size.
double avg_set_size(const std::vector<PredictionRecord>& records);

SetConfusion set_confusion(const std::vector<PredictionRecord>& records,
                           const std::vector<std::size_t>& truths);

struct SweepRow {
  double sig = 0.0;        // significance level
  double mean_err = 0.0;   // 1 - effective coverage
  double avg_c = 0.0;      // mean set size
  std::size_t n_correct = 0;
  std::vector<double> per_class_err;       // per-class miss rate
  std::vector<double> per_class_avg_size;  // per-class mean set size
};

/// One row per significance level, all derived from the same model/table.
std::vector<SweepRow> alpha_sweep(const ScoreModel& model, const CalibrationTable& table,
                                  const Dataset& test, const std::vector<double>& alphas,
                                  bool smoothed = false, std::size_t threads = 1);

struct CoverageCheck {
  double coverage = 0.0;
  double bound = 0.0;  // 1 - alpha - 2*sqrt(alpha*(1-alpha)/(trials*n_test))
  bool pass = false;
  std::vector<double> per_class_coverage;
};

/// Empirical harness for the coverage guarantee: repeats
/// generate / fit / calibrate / predict `n_trials` times with smoothed
/// p-values (the exchangeability-valid construction) and checks the mean
/// coverage against the Monte-Carlo bound.
CoverageCheck coverage_guarantee_check(std::size_t n_trials, std::size_t n_cal,
                                       std::size_t n_test, double alpha, std::uint64_t seed,
                                       const std::vector<std::size_t>& class_weights = {1, 1, 1});

struct RankedRecord {
  std::string id;
  std::size_t point_prediction = 0;
  double confidence = 0.0;
  double credibility = 0.0;
};

/// Non-rejected records whose point prediction is one of the target labels,
/// sorted by confidence desc, then credibility desc, then id asc.
std::vector<RankedRecord> ranking(const std::vector<PredictionRecord>& records,
                                  const std::vector<std::size_t>& target_labels);

}  // namespace rcp
