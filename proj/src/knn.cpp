#include "riskcp/knn.hpp"

#include <algorithm>

#include "riskcp/error.hpp"

namespace rcp {

KnnModel::KnnModel(LabelSet labels, std::vector<std::string> feature_names,
                   std::vector<Vec> points, std::vector<std::size_t> point_labels,
                   std::size_t k)
    : labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      points_(std::move(points)),
      point_labels_(std::move(point_labels)),
      k_(k) {
  if (k_ == 0 || k_ > points_.size()) {
    throw ValidationError("k must be in [1, number of training points]");
  }
}

std::vector<double> KnnModel::predict_proba(const Instance& x) const {
  std::vector<std::pair<double, std::size_t>> dists;
  dists.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    dists.emplace_back(squared_distance(points_[i], x.features), i);
  }
  std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k_),
                    dists.end());
  const std::size_t k_classes = labels_.size();
  std::vector<double> probs(k_classes, 0.0);
  for (std::size_t i = 0; i < k_; ++i) probs[point_labels_[dists[i].second]] += 1.0;
  for (double& p : probs) p = (p + 1.0) / static_cast<double>(k_ + k_classes);
  return probs;
}

nlohmann::json KnnModel::to_json() const {
  std::vector<double> flat;
  flat.reserve(points_.size() * (points_.empty() ? 0 : points_[0].size()));
  for (const auto& p : points_) flat.insert(flat.end(), p.begin(), p.end());
  return nlohmann::json{
      {"label_set", labels_.names()},
      {"feature_names", feature_names_},
      {"points", flat},
      {"point_labels", point_labels_},
      {"metadata", {{"type", "knn"}, {"k", k_}}},
  };
}

std::unique_ptr<KnnModel> KnnModel::from_json(const nlohmann::json& doc) {
  LabelSet labels(doc.at("label_set").get<std::vector<std::string>>());
  auto feature_names = doc.at("feature_names").get<std::vector<std::string>>();
  const auto flat = doc.at("points").get<std::vector<double>>();
  const auto point_labels = doc.at("point_labels").get<std::vector<std::size_t>>();
  const std::size_t d = feature_names.size();
  if (d == 0 || flat.size() % d != 0) throw ValidationError("malformed knn model JSON");
  std::vector<Vec> points(flat.size() / d, Vec(d));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) points[i][j] = flat[i * d + j];
  }
  return std::make_unique<KnnModel>(std::move(labels), std::move(feature_names),
                                    std::move(points), point_labels,
                                    doc.at("metadata").at("k").get<std::size_t>());
}

std::unique_ptr<KnnModel> fit_knn(const Dataset& train, std::size_t k) {
  if (k == 0 || k > train.size()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds training size " +
                          std::to_string(train.size()));
  }
  std::vector<Vec> points;
  points.reserve(train.size());
  for (const auto& inst : train.instances) points.push_back(inst.features);
  return std::make_unique<KnnModel>(train.label_set, train.feature_names,
                                    std::move(points), train.labels, k);
}

}  // namespace rcp
