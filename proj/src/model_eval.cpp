#include "riskcp/model_eval.hpp"

#include <algorithm>

#include "riskcp/error.hpp"

namespace rcp {

std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double accuracy(const ScoreModel& model, const Dataset& ds) {
  if (ds.size() == 0) throw ValidationError("accuracy over an empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (argmax_lowest(model.predict_proba(ds.instances[i])) == ds.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

std::vector<ReliabilityBin> reliability_diagram(const ScoreModel& model, const Dataset& ds,
                                                std::size_t bins) {
  if (bins == 0) throw ValidationError("bins must be >= 1");
  std::vector<ReliabilityBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].bin_center = (static_cast<double>(b) + 0.5) / static_cast<double>(bins);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto probs = model.predict_proba(ds.instances[i]);
    const std::size_t pred = argmax_lowest(probs);
    const double conf = probs[pred];
    std::size_t b = static_cast<std::size_t>(conf * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    out[b].mean_confidence += conf;
    out[b].empirical_accuracy += (pred == ds.labels[i]) ? 1.0 : 0.0;
    out[b].count += 1;
  }
  for (auto& bin : out) {
    if (bin.count > 0) {
      bin.mean_confidence /= static_cast<double>(bin.count);
      bin.empirical_accuracy /= static_cast<double>(bin.count);
    }
  }
  return out;
}

}  // namespace rcp
