#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskcp/dataset.hpp"

namespace rcp {

/// The pluggable probabilistic-classifier contract. Implementations must be
/// immutable once fitted and safe for concurrent predict_proba callers.
/// Output: one probability per label, entries in [0,1], summing to 1 within
/// 1e-9, in the label set's index order.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::vector<double> predict_proba(const Instance& x) const = 0;

  /// Full serialized form; also the basis of the model fingerprint.
  virtual nlohmann::json to_json() const = 0;

  virtual const LabelSet& label_set() const = 0;
};

/// FNV-1a hash of the serialized model. Calibration tables record it so a
/// table cannot silently be used with a different model.
std::uint64_t model_fingerprint(const ScoreModel& model);

/// Per-feature (mean, stddev) pairs; zero-variance features get stddev 1.
struct Standardizer {
  Vec means;
  Vec stds;

  static Standardizer fit(const Dataset& ds);
  Vec apply(const Vec& x) const;
  Vec invert(const Vec& z) const;
};

/// Reconstructs a model from its JSON document (dispatch on metadata.type).
std::unique_ptr<ScoreModel> model_from_json(const nlohmann::json& doc);

/// Probability-averaging ensemble over already-fitted members.
std::unique_ptr<ScoreModel> make_ensemble(std::vector<std::unique_ptr<ScoreModel>> members);

std::unique_ptr<ScoreModel> load_model(const std::string& path);
void save_model(const ScoreModel& model, const std::string& path);

}  // namespace rcp
