#pragma once

#include "riskcp/dataset.hpp"
#include "riskcp/mlp.hpp"
#include "riskcp/score_model.hpp"

namespace rcp {

struct GanTrainConfig {
  std::size_t members = 5;   // ensemble size M
  std::size_t noise_dim = 8;
  std::size_t hidden = 32;
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  double alpha = 0.1;             // level of the discriminator interval
  double holdout_fraction = 0.25; // real rows reserved for the interval
  std::uint64_t seed = 0;
};

/// Bootstrap ensemble of generator/discriminator pairs plus the conformal
/// interval on ensemble-mean discriminator scores of held-out real rows.
/// A score outside the interval marks an input as synthetic.
struct GanEnsemble {
  std::vector<Mlp> generators;
  std::vector<Mlp> discriminators;
  std::size_t noise_dim = 0;
  Standardizer standardizer;
  std::vector<std::string> feature_names;
  double interval_lo = -std::numeric_limits<double>::infinity();
  double interval_hi = std::numeric_limits<double>::infinity();
  double alpha = 0.1;
  std::uint64_t seed = 0;

  /// Ensemble-mean discriminator score for a raw-feature vector.
  double score(const Vec& features) const;

  nlohmann::json to_json() const;
  static GanEnsemble from_json(const nlohmann::json& doc);
};

/// Two-sided split-conformal interval on a score sample: quantiles at
/// alpha/2 and 1 - alpha/2 with +/-infinity sentinels when a rank falls
/// outside the sample.
std::pair<double, double> conformal_interval(std::vector<double> scores, double alpha);

/// Trains M generator/discriminator pairs on bootstrap resamples of the
/// training pool (real rows minus the interval holdout) with the
/// non-saturating GAN loss, then calibrates the interval on the holdout.
/// `real` is expected to be restricted to a single class.
GanEnsemble gan_fit(const Dataset& real, const GanTrainConfig& cfg);

/// n de-standardized samples, each from a uniformly chosen ensemble member.
/// Ids are "g1".."gn". Deterministic per seed.
std::vector<Instance> gan_sample(const GanEnsemble& ens, std::size_t n, std::uint64_t seed);

struct Discrimination {
  double score = 0.0;
  bool synthetic = false;
};

Discrimination conformalized_discriminate(const GanEnsemble& ens, const Instance& x);

/// Merges a two-class source dataset with generated rows into the evolved
/// three-class dataset: class 0 keeps the source rows plus generated_free,
/// class 1 keeps only its source rows, and generated_infected becomes the new
/// evolved class (label name `evolved_label`). Generated ids get a "gen-"
/// prefix; source instances pass through untouched.
Dataset assemble_evolved(const Dataset& source, const std::vector<Instance>& generated_infected,
                         const std::vector<Instance>& generated_free,
                         const std::string& evolved_label = "T-EV");

struct MarginalDiff {
  std::string feature;
  double mean_diff = 0.0;      // synth mean - real mean
  double stddev_ratio = 1.0;   // synth / real
  double ks = 0.0;             // Kolmogorov-Smirnov statistic
};

/// Per-feature distribution diagnostics; purely descriptive.
std::vector<MarginalDiff> compare_marginals(const Dataset& real, const Dataset& synth);

}  // namespace rcp
