#include "riskcp/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "riskcp/error.hpp"
#include "riskcp/rng.hpp"

namespace rcp {

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw ValidationError("label set needs at least 2 labels, got " +
                          std::to_string(labels_.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw ValidationError("duplicate label '" + l + "' in label set");
    }
  }
}

std::optional<std::size_t> LabelSet::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(label_set.size(), 0);
  for (std::size_t y : labels) counts.at(y)++;
  return counts;
}

void Dataset::validate() const {
  if (instances.size() != labels.size()) {
    throw ValidationError("dataset instance/label length mismatch");
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (labels[i] >= label_set.size()) {
      throw ValidationError("label index out of range for instance " + instances[i].id);
    }
    if (instances[i].features.size() != dim()) {
      throw ValidationError("feature length mismatch for instance " + instances[i].id);
    }
    for (double v : instances[i].features) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite feature in instance " + instances[i].id);
      }
    }
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty file: " + path);
  const auto header = split_line(line);

  std::size_t label_col = header.size();
  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == label_column) {
      label_col = j;
    } else {
      feature_names.push_back(header[j]);
    }
  }
  if (label_col == header.size()) {
    throw ValidationError("label column '" + label_column + "' not found in " + path);
  }

  std::vector<std::string> label_names;
  std::unordered_map<std::string, std::size_t> label_index;
  std::vector<Instance> instances;
  std::vector<std::size_t> labels;

  std::size_t file_line = 1;  // header was line 1
  while (std::getline(in, line)) {
    ++file_line;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("row " + std::to_string(file_line) + " in " + path + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    }
    Instance inst;
    inst.id = "r" + std::to_string(instances.size() + 1);
    inst.features.reserve(feature_names.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_col) continue;
      const std::string& cell = cells[j];
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin || *end != '\0' || !std::isfinite(v)) {
        throw ValidationError("non-numeric feature cell '" + cell + "' at row " +
                              std::to_string(file_line) + ", column '" + header[j] + "'");
      }
      inst.features.push_back(v);
    }
    const std::string& label = cells[label_col];
    auto it = label_index.find(label);
    if (it == label_index.end()) {
      it = label_index.emplace(label, label_names.size()).first;
      label_names.push_back(label);
    }
    labels.push_back(it->second);
    instances.push_back(std::move(inst));
  }

  if (label_names.size() < 2) {
    throw ValidationError("dataset in " + path + " has " +
                          std::to_string(label_names.size()) +
                          " distinct label(s); need at least 2");
  }

  Dataset ds;
  ds.label_set = LabelSet(std::move(label_names));
  ds.feature_names = std::move(feature_names);
  ds.instances = std::move(instances);
  ds.labels = std::move(labels);
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path, const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
    if (j) out << ',';
    out << ds.feature_names[j];
  }
  out << (ds.feature_names.empty() ? "" : ",") << label_column << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& f = ds.instances[i].features;
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (j) out << ',';
      out << format_double(f[j]);
    }
    out << (f.empty() ? "" : ",") << ds.label_set.name(ds.labels[i]) << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

namespace {

// Floor allocation by ratio; remainders go to the first nonzero-ratio splits
// in (train, calibration, test) order.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& ratios) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    sizes[s] = static_cast<std::size_t>(std::floor(n * ratios[s] / total));
    assigned += sizes[s];
  }
  std::size_t left = n - assigned;
  for (int s = 0; s < 3 && left > 0; ++s) {
    if (ratios[s] > 0.0) {
      ++sizes[s];
      --left;
    }
  }
  // floor() drops < 1 per split, so at most two leftovers exist; if ratios
  // were zero for early splits the loop above may not exhaust them.
  for (int s = 0; left > 0; s = (s + 1) % 3) {
    if (ratios[s] > 0.0) {
      ++sizes[s];
      --left;
    }
  }
  return sizes;
}

Dataset take(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.label_set = ds.label_set;
  out.feature_names = ds.feature_names;
  out.instances.reserve(idx.size());
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    out.instances.push_back(ds.instances[i]);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

}  // namespace

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (ds.size() == 0) throw ValidationError("cannot split an empty dataset");
  const std::array<double, 3> ratios{spec.train, spec.calibration, spec.test};
  if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0 ||
      ratios[0] + ratios[1] + ratios[2] <= 0) {
    throw ValidationError("split ratios must be nonnegative with a positive sum");
  }
  const int nonempty =
      (ratios[0] > 0) + (ratios[1] > 0) + (ratios[2] > 0);

  RngStream rng(spec.seed, 0);
  std::array<std::vector<std::size_t>, 3> parts;

  auto assign_group = [&](std::vector<std::size_t>& idx) {
    rng.shuffle(idx);
    auto sizes = apportion(idx.size(), ratios);
    // Every nonempty split must see the class when it is large enough;
    // steal from the currently largest split for the ones floored to zero.
    if (spec.stratified && idx.size() >= static_cast<std::size_t>(nonempty)) {
      for (int s = 0; s < 3; ++s) {
        if (ratios[s] > 0.0 && sizes[s] == 0) {
          int donor = 0;
          for (int t = 1; t < 3; ++t) {
            if (sizes[t] > sizes[donor]) donor = t;
          }
          --sizes[donor];
          ++sizes[s];
        }
      }
    }
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < sizes[s]; ++i) parts[s].push_back(idx[pos++]);
    }
  };

  if (spec.stratified) {
    const auto counts = ds.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] < static_cast<std::size_t>(nonempty)) {
        throw ValidationError("class '" + ds.label_set.name(k) + "' has " +
                              std::to_string(counts[k]) +
                              " members, fewer than the " + std::to_string(nonempty) +
                              " nonempty splits");
      }
    }
    for (std::size_t k = 0; k < ds.label_set.size(); ++k) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] == k) idx.push_back(i);
      }
      assign_group(idx);
    }
  } else {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    assign_group(idx);
  }

  // Keep input order inside each split so output is independent of the
  // per-class assignment order.
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return {take(ds, parts[0]), take(ds, parts[1]), take(ds, parts[2])};
}

Dataset synth_benchmark(const std::vector<std::size_t>& n_per_class, std::size_t d,
                        double separation, std::uint64_t seed) {
  if (n_per_class.size() < 2) throw ValidationError("need at least 2 classes");
  for (std::size_t n : n_per_class) {
    if (n == 0) throw ValidationError("per-class counts must be positive");
  }
  if (d < 1) throw ValidationError("dimension must be >= 1");
  if (separation < 0) throw ValidationError("separation must be >= 0");

  const std::size_t k_classes = n_per_class.size();
  std::vector<std::string> names;
  static const char* kDomainNames[3] = {"TF", "TI", "T-EV"};
  for (std::size_t k = 0; k < k_classes; ++k) {
    names.push_back(k < 3 ? kDomainNames[k] : "C" + std::to_string(k));
  }

  auto center = [&](std::size_t k) {
    Vec c(d, 0.0);
    if (k < d) {
      c[k] = separation;
    } else {
      const double scale = separation / std::sqrt(static_cast<double>(d));
      for (std::size_t j = 0; j < d; ++j) {
        c[j] = ((k >> (j % 64)) & 1ULL) ? scale : -scale;
      }
    }
    return c;
  };

  Dataset ds;
  ds.label_set = LabelSet(std::move(names));
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j + 1));

  RngStream rng(seed, 0);
  std::size_t row = 0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    const Vec c = center(k);
    for (std::size_t i = 0; i < n_per_class[k]; ++i) {
      Instance inst;
      inst.id = "r" + std::to_string(++row);
      inst.features.resize(d);
      for (std::size_t j = 0; j < d; ++j) inst.features[j] = c[j] + rng.next_gaussian();
      ds.instances.push_back(std::move(inst));
      ds.labels.push_back(k);
    }
  }
  return ds;
}

Dataset reindex_labels(const Dataset& ds, const LabelSet& target) {
  Dataset out;
  out.label_set = target;
  out.feature_names = ds.feature_names;
  out.instances = ds.instances;
  out.labels.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string& name = ds.label_set.name(ds.labels[i]);
    auto idx = target.index_of(name);
    if (!idx) {
      throw ValidationError("label '" + name + "' not present in the target label set");
    }
    out.labels.push_back(*idx);
  }
  return out;
}

Dataset filter_class(const Dataset& ds, std::size_t label_index) {
  if (label_index >= ds.label_set.size()) {
    throw ValidationError("class index out of range");
  }
  Dataset out;
  out.label_set = ds.label_set;
  out.feature_names = ds.feature_names;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] == label_index) {
      out.instances.push_back(ds.instances[i]);
      out.labels.push_back(ds.labels[i]);
    }
  }
  return out;
}

}  // namespace rcp
