#include "riskcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "riskcp/error.hpp"

namespace rcp {

double nonconformity_inverse_prob(const std::vector<double>& probs, std::size_t label) {
  if (label >= probs.size()) throw ValidationError("label index out of range");
  return 1.0 - probs[label];
}

Nonconformity inverse_prob_nonconformity() {
  return Nonconformity{"inverse_prob", nonconformity_inverse_prob};
}

CalibrationTable calibrate(const ScoreModel& model, const Dataset& cal,
                           const Nonconformity& fn) {
  const std::size_t k_classes = model.num_classes();
  CalibrationTable table;
  table.scores_by_class.assign(k_classes, {});
  table.nonconformity = fn;
  table.model_fingerprint = model_fingerprint(model);

  for (std::size_t i = 0; i < cal.size(); ++i) {
    const auto probs = model.predict_proba(cal.instances[i]);
    table.scores_by_class.at(cal.labels[i]).push_back(fn.score(probs, cal.labels[i]));
  }

  std::string missing;
  for (std::size_t k = 0; k < k_classes; ++k) {
    if (table.scores_by_class[k].empty()) {
      if (!missing.empty()) missing += ", ";
      missing += cal.label_set.size() > k ? cal.label_set.name(k) : std::to_string(k);
    }
    std::sort(table.scores_by_class[k].begin(), table.scores_by_class[k].end());
  }
  if (!missing.empty()) {
    throw ValidationError("calibration set has no examples for class(es): " + missing);
  }
  return table;
}

double p_value(const CalibrationTable& table, double score, std::size_t k, bool smoothed) {
  if (k >= table.class_count()) throw ValidationError("unknown class index");
  const auto& scores = table.scores_by_class[k];
  if (scores.empty()) throw ValidationError("empty calibration class");
  // scores is ascending; everything from lower_bound on is >= score.
  const auto it = std::lower_bound(scores.begin(), scores.end(), score);
  const auto at_least = static_cast<double>(scores.end() - it);
  const auto n_k = static_cast<double>(scores.size());
  return smoothed ? (at_least + 1.0) / (n_k + 1.0) : at_least / n_k;
}

bool PredictionRecord::set_contains(std::size_t k) const {
  return std::binary_search(prediction_set.begin(), prediction_set.end(), k);
}

ConfidenceSummary confidence_from_pvalues(const std::vector<double>& p) {
  if (p.size() < 2) throw ValidationError("need at least 2 p-values");
  ConfidenceSummary s;
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] > p[best]) best = k;
  }
  double second = -1.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k != best && p[k] > second) second = p[k];
  }
  s.point = best;
  s.credibility = p[best];
  s.confidence = 1.0 - second;
  return s;
}

PredictionRecord record_from_pvalues(std::string id, std::vector<double> p, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
  PredictionRecord rec;
  rec.id = std::move(id);
  rec.alpha = alpha;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > alpha) rec.prediction_set.push_back(k);
  }
  const ConfidenceSummary s = confidence_from_pvalues(p);
  rec.point_prediction = s.point;
  rec.confidence = s.confidence;
  rec.credibility = s.credibility;
  rec.rejected = rec.prediction_set.empty();
  rec.p_values = std::move(p);
  return rec;
}

namespace {

void check_fingerprint(const ScoreModel& model, const CalibrationTable& table) {
  if (table.model_fingerprint != model_fingerprint(model)) {
    throw ValidationError("calibration table was built from a different model");
  }
}

PredictionRecord predict_unchecked(const ScoreModel& model, const CalibrationTable& table,
                                   const Instance& x, double alpha, bool smoothed) {
  const auto probs = model.predict_proba(x);
  std::vector<double> p(table.class_count());
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = p_value(table, table.nonconformity.score(probs, k), k, smoothed);
  }
  return record_from_pvalues(x.id, std::move(p), alpha);
}

}  // namespace

PredictionRecord predict(const ScoreModel& model, const CalibrationTable& table,
                         const Instance& x, double alpha, bool smoothed) {
  check_fingerprint(model, table);
  return predict_unchecked(model, table, x, alpha, smoothed);
}

std::vector<PredictionRecord> predict_batch(const ScoreModel& model,
                                            const CalibrationTable& table, const Dataset& ds,
                                            double alpha, bool smoothed,
                                            std::size_t threads) {
  check_fingerprint(model, table);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
  std::vector<PredictionRecord> out(ds.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = predict_unchecked(model, table, ds.instances[i], alpha, smoothed);
    }
  };
  if (threads <= 1 || ds.size() < 2) {
    work(0, ds.size());
  } else {
    const std::size_t used = std::min<std::size_t>(threads, ds.size());
    std::vector<std::thread> pool;
    std::mutex mutex;
    std::exception_ptr first_error;
    const std::size_t chunk = (ds.size() + used - 1) / used;
    for (std::size_t t = 0; t < used; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(begin + chunk, ds.size());
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return out;
}

}  // namespace rcp
