#pragma once

#include <functional>
#include <string>
#include <vector>

#include "riskcp/score_model.hpp"

namespace rcp {

/// Strangeness of an example given the model's probability vector for it and
/// a hypothesized label. Larger = stranger. Must be deterministic and finite
/// for valid probability vectors.
struct Nonconformity {
  std::string id;
  std::function<double(const std::vector<double>& probs, std::size_t label)> score;
};

/// The standard score 1 - P(label | x).
double nonconformity_inverse_prob(const std::vector<double>& probs, std::size_t label);

/// The default Nonconformity ("inverse_prob").
Nonconformity inverse_prob_nonconformity();

/// Per-class sorted calibration scores. Class-conditional p-values are
/// counted only against the scores of the hypothesized class, which is what
/// gives per-class validity on imbalanced data.
struct CalibrationTable {
  std::vector<std::vector<double>> scores_by_class;  // each ascending
  Nonconformity nonconformity;
  std::uint64_t model_fingerprint = 0;

  std::size_t class_count() const { return scores_by_class.size(); }
  std::size_t count(std::size_t k) const { return scores_by_class.at(k).size(); }
};

/// Scores every calibration example against its true class and buckets the
/// results per class. Every class must be present.
CalibrationTable calibrate(const ScoreModel& model, const Dataset& cal,
                           const Nonconformity& fn = inverse_prob_nonconformity());

/// Class-conditional p-value for a test score under class k.
///   unsmoothed: |{a_i >= score}| / n_k        (ties count as conforming)
///   smoothed:   (|{a_i >= score}| + 1) / (n_k + 1)
/// The smoothed form is the one with the finite-sample coverage guarantee;
/// the unsmoothed form is kept as the default for fidelity with the tables
/// this report layout mirrors.
double p_value(const CalibrationTable& table, double score, std::size_t k, bool smoothed);

struct PredictionRecord {
  std::string id;
  std::vector<double> p_values;
  std::vector<std::size_t> prediction_set;  // ascending label indices
  std::size_t point_prediction = 0;
  double confidence = 0.0;
  double credibility = 0.0;
  bool rejected = false;
  double alpha = 0.0;

  bool set_contains(std::size_t k) const;
};

struct ConfidenceSummary {
  double confidence = 0.0;   // 1 - second-largest p-value
  double credibility = 0.0;  // largest p-value
  std::size_t point = 0;     // argmax p-value, ties toward lower index
};

/// Needs at least two entries. Under the membership rule p > alpha this
/// matches sup{1 - eps : |set(eps)| <= 1}.
ConfidenceSummary confidence_from_pvalues(const std::vector<double>& p);

/// Builds a full record from an already-computed p-vector. Membership uses
/// strict inequality: label in set iff p > alpha. An empty set is a reject.
PredictionRecord record_from_pvalues(std::string id, std::vector<double> p, double alpha);

/// Mondrian inductive prediction for one instance: score each hypothesized
/// label with the table's nonconformity, convert to class-conditional
/// p-values, threshold at alpha. Throws if the table was built from a
/// different model (fingerprint mismatch).
PredictionRecord predict(const ScoreModel& model, const CalibrationTable& table,
                         const Instance& x, double alpha, bool smoothed = false);

/// Element-wise predict, order preserved. threads > 1 splits the batch; the
/// per-instance computation is pure so the output does not depend on the
/// thread count.
std::vector<PredictionRecord> predict_batch(const ScoreModel& model,
                                            const CalibrationTable& table, const Dataset& ds,
                                            double alpha, bool smoothed = false,
                                            std::size_t threads = 1);

}  // namespace rcp
