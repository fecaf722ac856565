#pragma once

#include "riskcp/score_model.hpp"

namespace rcp {

/// k-nearest-neighbor scorer over raw (unstandardized) features. Votes are
/// Laplace-smoothed: (votes + 1) / (k + K). Neighbor ties at equal distance
/// resolve toward the lower training-row index.
class KnnModel : public ScoreModel {
 public:
  KnnModel(LabelSet labels, std::vector<std::string> feature_names,
           std::vector<Vec> points, std::vector<std::size_t> point_labels, std::size_t k);

  std::size_t num_classes() const override { return labels_.size(); }
  std::vector<double> predict_proba(const Instance& x) const override;
  nlohmann::json to_json() const override;
  const LabelSet& label_set() const override { return labels_; }

  static std::unique_ptr<KnnModel> from_json(const nlohmann::json& doc);

 private:
  LabelSet labels_;
  std::vector<std::string> feature_names_;
  std::vector<Vec> points_;
  std::vector<std::size_t> point_labels_;
  std::size_t k_;
};

std::unique_ptr<KnnModel> fit_knn(const Dataset& train, std::size_t k);

}  // namespace rcp
