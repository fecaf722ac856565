#include "riskcp/setpredictors.hpp"

#include <algorithm>
#include <cmath>

#include "riskcp/error.hpp"

namespace rcp {

double conformal_quantile(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw ValidationError("conformal quantile of an empty score list");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
  const auto n = scores.size();
  const double raw = std::ceil(static_cast<double>(n + 1) * (1.0 - alpha));
  const auto rank = static_cast<std::size_t>(raw);
  if (rank > n) return std::numeric_limits<double>::infinity();
  std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   scores.end());
  return scores[rank - 1];
}

std::vector<std::size_t> probability_order(const std::vector<double>& probs) {
  std::vector<std::size_t> order(probs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order;
}

namespace {

std::vector<double> proba_or_throw(const ScoreModel& model, const Instance& x) {
  auto p = model.predict_proba(x);
  if (p.size() != model.num_classes()) throw ValidationError("bad probability vector");
  return p;
}

class NaivePredictor : public SetPredictor {
 public:
  NaivePredictor(const ScoreModel& model, double threshold, double alpha)
      : model_(model), threshold_(threshold), alpha_(alpha) {}

  std::vector<std::size_t> predict_set(const Instance& x) const override {
    const auto probs = proba_or_throw(model_, x);
    std::vector<std::size_t> set;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (1.0 - probs[k] <= threshold_) set.push_back(k);
    }
    return set;
  }

  double alpha() const override { return alpha_; }
  std::string method() const override { return "naive"; }

 private:
  const ScoreModel& model_;
  double threshold_;
  double alpha_;
};

class TopkPredictor : public SetPredictor {
 public:
  TopkPredictor(const ScoreModel& model, std::size_t k_star, double alpha)
      : model_(model), k_star_(k_star), alpha_(alpha) {}

  std::vector<std::size_t> predict_set(const Instance& x) const override {
    const auto probs = proba_or_throw(model_, x);
    const auto order = probability_order(probs);
    const std::size_t take = std::min(k_star_, order.size());
    std::vector<std::size_t> set(order.begin(),
                                 order.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(set.begin(), set.end());
    return set;
  }

  double alpha() const override { return alpha_; }
  std::string method() const override { return "top_k"; }

 private:
  const ScoreModel& model_;
  std::size_t k_star_;
  double alpha_;
};

double raps_regularizer(std::size_t rank_1based, double lambda, std::size_t k_reg) {
  const double over = static_cast<double>(rank_1based) - static_cast<double>(k_reg);
  return lambda * std::max(0.0, over);
}

class RapsPredictor : public SetPredictor {
 public:
  RapsPredictor(const ScoreModel& model, double threshold, double alpha, double lambda,
                std::size_t k_reg)
      : model_(model), threshold_(threshold), alpha_(alpha), lambda_(lambda), k_reg_(k_reg) {}

  std::vector<std::size_t> predict_set(const Instance& x) const override {
    const auto probs = proba_or_throw(model_, x);
    const auto order = probability_order(probs);
    std::vector<std::size_t> set;
    double cumulative = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      cumulative += probs[order[pos]];
      const double score = cumulative + raps_regularizer(pos + 1, lambda_, k_reg_);
      if (pos == 0 || score <= threshold_) {
        set.push_back(order[pos]);
      } else {
        break;
      }
    }
    std::sort(set.begin(), set.end());
    return set;
  }

  double alpha() const override { return alpha_; }
  std::string method() const override { return "raps"; }

 private:
  const ScoreModel& model_;
  double threshold_;
  double alpha_;
  double lambda_;
  std::size_t k_reg_;
};

std::size_t rank_of_truth(const std::vector<double>& probs, std::size_t truth) {
  const auto order = probability_order(probs);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (order[pos] == truth) return pos + 1;
  }
  throw ValidationError("truth label missing from probability vector");
}

}  // namespace

std::unique_ptr<SetPredictor> naive_predictor(const ScoreModel& model, const Dataset& cal,
                                              double alpha) {
  if (cal.size() == 0) throw ValidationError("empty calibration dataset");
  std::vector<double> scores;
  scores.reserve(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    scores.push_back(1.0 - proba_or_throw(model, cal.instances[i])[cal.labels[i]]);
  }
  return std::make_unique<NaivePredictor>(model, conformal_quantile(std::move(scores), alpha),
                                          alpha);
}

std::unique_ptr<SetPredictor> topk_predictor(const ScoreModel& model, const Dataset& cal,
                                             double alpha) {
  if (cal.size() == 0) throw ValidationError("empty calibration dataset");
  std::vector<double> ranks;
  ranks.reserve(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    ranks.push_back(static_cast<double>(
        rank_of_truth(proba_or_throw(model, cal.instances[i]), cal.labels[i])));
  }
  const double q = conformal_quantile(std::move(ranks), alpha);
  const std::size_t k_star = std::isinf(q) ? model.num_classes()
                                           : static_cast<std::size_t>(q);
  return std::make_unique<TopkPredictor>(model, k_star, alpha);
}

std::unique_ptr<SetPredictor> raps_predictor(const ScoreModel& model, const Dataset& cal,
                                             double alpha, double lambda, std::size_t k_reg,
                                             bool randomized) {
  if (cal.size() == 0) throw ValidationError("empty calibration dataset");
  if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  if (k_reg == 0) throw ValidationError("k_reg must be positive");
  if (randomized) {
    throw ValidationError("randomized raps is not implemented; use the deterministic variant");
  }
  std::vector<double> scores;
  scores.reserve(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const auto probs = proba_or_throw(model, cal.instances[i]);
    const auto order = probability_order(probs);
    double cumulative = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      cumulative += probs[order[pos]];
      if (order[pos] == cal.labels[i]) {
        scores.push_back(cumulative + raps_regularizer(pos + 1, lambda, k_reg));
        break;
      }
    }
  }
  return std::make_unique<RapsPredictor>(model, conformal_quantile(std::move(scores), alpha),
                                         alpha, lambda, k_reg);
}

std::size_t count_detected(const SetPredictor& pred, const Dataset& ds,
                           const std::vector<std::size_t>& target_labels) {
  std::size_t detected = 0;
  for (const auto& inst : ds.instances) {
    const auto set = pred.predict_set(inst);
    if (set.empty()) continue;
    const bool subset = std::all_of(set.begin(), set.end(), [&](std::size_t k) {
      return std::find(target_labels.begin(), target_labels.end(), k) != target_labels.end();
    });
    if (subset) ++detected;
  }
  return detected;
}

}  // namespace rcp
