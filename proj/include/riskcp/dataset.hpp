#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "riskcp/linalg.hpp"

namespace rcp {

/// One example: an opaque id plus a fixed-length feature vector.
struct Instance {
  std::string id;
  Vec features;
};

/// Ordered list of distinct class names. The order is fixed at construction
/// and defines the class indices used everywhere downstream (p-value vectors,
/// reports, model outputs).
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& name(std::size_t k) const { return labels_.at(k); }
  const std::vector<std::string>& names() const { return labels_; }
  std::optional<std::size_t> index_of(const std::string& label) const;
  bool operator==(const LabelSet& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
};

/// Immutable after construction; safe to share read-only across threads.
struct Dataset {
  LabelSet label_set;
  std::vector<std::string> feature_names;
  std::vector<Instance> instances;
  std::vector<std::size_t> labels;  // parallel to instances

  std::size_t size() const { return instances.size(); }
  std::size_t dim() const { return feature_names.size(); }
  std::vector<std::size_t> class_counts() const;

  /// Throws ValidationError if any structural invariant is broken
  /// (label index range, feature length, non-finite feature).
  void validate() const;
};

struct SplitSpec {
  double train = 2.0;
  double calibration = 1.0;
  double test = 1.0;
  std::uint64_t seed = 0;
  bool stratified = false;
};

/// Loads the standard dataset CSV: header row, one label column named
/// `label_column`, every other column a finite real feature. Labels enter the
/// LabelSet in first-appearance order. Instance ids are positional ("r1"...).
Dataset load_csv(const std::string& path, const std::string& label_column);

/// Inverse of load_csv; feature values are written in shortest exact form so
/// a reload reproduces the dataset bit for bit.
void save_csv(const Dataset& ds, const std::string& path,
              const std::string& label_column = "label");

/// Random disjoint cover with sizes proportional to the spec ratios.
/// Rounding remainders go to train first, then calibration, then test.
/// Stratified mode splits each class with the same rule and guarantees every
/// nonempty split sees every class that has at least as many members as there
/// are nonempty splits.
std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// Gaussian-mixture benchmark: class k is an isotropic unit-variance Gaussian
/// centered at separation * u_k, where u_k = e_k for k < d and otherwise a
/// normalized +/-1 pattern taken from the bits of k (so centers stay distinct
/// when there are more classes than dimensions). Class names default to
/// TF / TI / T-EV for the first three classes and C<k> beyond.
Dataset synth_benchmark(const std::vector<std::size_t>& n_per_class, std::size_t d,
                        double separation, std::uint64_t seed);

/// Re-expresses `ds` against `target` label indices (matching by name).
/// Throws if ds uses a label that target does not contain.
Dataset reindex_labels(const Dataset& ds, const LabelSet& target);

/// Restricts to instances of one class (label set is preserved).
Dataset filter_class(const Dataset& ds, std::size_t label_index);

}  // namespace rcp
