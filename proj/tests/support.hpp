#pragma once

// Shared helpers for the test suites.

#include <functional>
#include <utility>

#include "riskcp/score_model.hpp"

namespace rcp::testing {

/// ScoreModel whose probabilities come from an arbitrary function of the
/// instance; enough to drive predictors and tables from hand fixtures.
class StubModel : public ScoreModel {
 public:
  StubModel(LabelSet labels, std::function<std::vector<double>(const Instance&)> fn)
      : labels_(std::move(labels)), fn_(std::move(fn)) {}

  std::size_t num_classes() const override { return labels_.size(); }
  std::vector<double> predict_proba(const Instance& x) const override { return fn_(x); }
  nlohmann::json to_json() const override {
    return nlohmann::json{{"metadata", {{"type", "stub"}}}};
  }
  const LabelSet& label_set() const override { return labels_; }

 private:
  LabelSet labels_;
  std::function<std::vector<double>(const Instance&)> fn_;
};

inline LabelSet abc_labels(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back(std::string(1, char('A' + i)));
  return LabelSet(names);
}

}  // namespace rcp::testing
