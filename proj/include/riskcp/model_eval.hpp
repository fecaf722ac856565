#pragma once

#include "riskcp/score_model.hpp"

namespace rcp {

/// Fraction of instances whose argmax probability matches the truth.
/// Argmax ties break toward the lower label index.
double accuracy(const ScoreModel& model, const Dataset& ds);

struct ReliabilityBin {
  double bin_center = 0.0;
  double mean_confidence = 0.0;
  double empirical_accuracy = 0.0;
  std::size_t count = 0;
};

/// Buckets instances by max probability into `bins` equal-width bins over
/// [0,1] (a confidence of exactly 1 lands in the last bin). Empty bins keep
/// count 0 with zeroed statistics.
std::vector<ReliabilityBin> reliability_diagram(const ScoreModel& model, const Dataset& ds,
                                                std::size_t bins);

/// Argmax with ties toward the lower index.
std::size_t argmax_lowest(const std::vector<double>& v);

}  // namespace rcp
