#include "riskcp/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskcp/error.hpp"

namespace rcp {

double GanEnsemble::score(const Vec& features) const {
  const Vec z = standardizer.apply(features);
  double acc = 0.0;
  for (const auto& d : discriminators) acc += d.forward(z)[0];
  return acc / static_cast<double>(discriminators.size());
}

std::pair<double, double> conformal_interval(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw ValidationError("conformal interval of an empty score list");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
  std::sort(scores.begin(), scores.end());
  const double n1 = static_cast<double>(scores.size() + 1);
  const auto lo_rank = static_cast<std::size_t>(std::floor(n1 * alpha / 2.0));
  const auto hi_rank = static_cast<std::size_t>(std::ceil(n1 * (1.0 - alpha / 2.0)));
  const double lo = lo_rank >= 1 ? scores[lo_rank - 1]
                                 : -std::numeric_limits<double>::infinity();
  const double hi = hi_rank <= scores.size() ? scores[hi_rank - 1]
                                             : std::numeric_limits<double>::infinity();
  return {lo, hi};
}

namespace {

constexpr const char* kGanSchema = "gan_ensemble";

// Forward through the discriminator up to the last pre-activation (the
// logit); the loss gradients are formed there to keep sigmoid + log stable.
double discriminator_logit(const Mlp& d, const Vec& x, Mlp::Cache& cache) {
  d.forward(x, cache);
  return cache.pre.back()[0];
}

struct PairTrainer {
  Mlp& gen;
  Mlp& dis;
  MomentumSgd gen_opt;
  MomentumSgd dis_opt;

  PairTrainer(Mlp& g, Mlp& d, const GanTrainConfig& cfg)
      : gen(g),
        dis(d),
        gen_opt(g, cfg.learning_rate, cfg.momentum),
        dis_opt(d, cfg.learning_rate, cfg.momentum) {}

  Vec sample_noise(std::size_t k, RngStream& rng) {
    Vec z(k);
    for (double& v : z) v = rng.next_gaussian();
    return z;
  }

  // One discriminator update on `real_rows` vs freshly generated fakes.
  // Returns the mean discriminator loss before the step.
  double discriminator_step(const std::vector<const Vec*>& real_rows, std::size_t k,
                            RngStream& rng) {
    auto grads = dis.zero_grads();
    double loss = 0.0;
    const auto batch = static_cast<double>(real_rows.size());
    Mlp::Cache cache;
    for (const Vec* x : real_rows) {
      const double t = discriminator_logit(dis, *x, cache);
      loss += softplus(-t);  // -log D(x)
      dis.backward(cache, {(sigmoid(t) - 1.0) / batch}, true, &grads);
    }
    for (std::size_t i = 0; i < real_rows.size(); ++i) {
      const Vec fake = gen.forward(sample_noise(k, rng));
      const double t = discriminator_logit(dis, fake, cache);
      loss += softplus(t);  // -log(1 - D(G(z)))
      dis.backward(cache, {sigmoid(t) / batch}, true, &grads);
    }
    dis_opt.step(dis, grads);
    return loss / batch;
  }

  // One non-saturating generator update: minimize -log D(G(z)).
  double generator_step(std::size_t batch, std::size_t k, RngStream& rng) {
    auto grads = gen.zero_grads();
    double loss = 0.0;
    Mlp::Cache gen_cache;
    Mlp::Cache dis_cache;
    for (std::size_t i = 0; i < batch; ++i) {
      const Vec z = sample_noise(k, rng);
      const Vec fake = gen.forward(z, gen_cache);
      const double t = discriminator_logit(dis, fake, dis_cache);
      loss += softplus(-t);
      const Vec grad_fake = dis.backward(
          dis_cache, {(sigmoid(t) - 1.0) / static_cast<double>(batch)}, true, nullptr);
      gen.backward(gen_cache, grad_fake, false, &grads);
    }
    gen_opt.step(gen, grads);
    return loss / static_cast<double>(batch);
  }
};

}  // namespace

GanEnsemble gan_fit(const Dataset& real, const GanTrainConfig& cfg) {
  const std::size_t n = real.size();
  if (cfg.members < 1) throw ValidationError("ensemble size must be >= 1");
  if (n < 2 * cfg.batch_size) {
    throw ValidationError("too few real rows: " + std::to_string(n) + " < 2 * batch_size (" +
                          std::to_string(2 * cfg.batch_size) + ")");
  }

  GanEnsemble ens;
  ens.noise_dim = cfg.noise_dim;
  ens.alpha = cfg.alpha;
  ens.seed = cfg.seed;
  ens.feature_names = real.feature_names;
  ens.standardizer = Standardizer::fit(real);

  std::vector<Vec> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = ens.standardizer.apply(real.instances[i].features);
  }

  // Reserve a holdout for the interval; the rest is the bootstrap pool.
  RngStream split_rng(cfg.seed, 0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  split_rng.shuffle(order);
  std::size_t n_hold = static_cast<std::size_t>(
      std::round(cfg.holdout_fraction * static_cast<double>(n)));
  n_hold = std::clamp<std::size_t>(n_hold, 1, n - 1);
  std::vector<std::size_t> holdout(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(n_hold),
                                order.end());

  const std::size_t d = real.dim();
  for (std::size_t m = 0; m < cfg.members; ++m) {
    RngStream rng(cfg.seed, m + 1);
    Mlp gen = Mlp::create({cfg.noise_dim, cfg.hidden, d},
                          {Activation::Tanh, Activation::Identity}, rng);
    Mlp dis = Mlp::create({d, cfg.hidden, 1}, {Activation::Tanh, Activation::Sigmoid}, rng);

    std::vector<std::size_t> boot(pool.size());
    for (auto& idx : boot) idx = pool[rng.next_index(pool.size())];

    PairTrainer trainer(gen, dis, cfg);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(boot);
      for (std::size_t start = 0; start < boot.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(start + cfg.batch_size, boot.size());
        if (stop - start < 2) break;  // skip runt batches
        std::vector<const Vec*> real_rows;
        real_rows.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) real_rows.push_back(&rows[boot[i]]);
        const double d_loss = trainer.discriminator_step(real_rows, cfg.noise_dim, rng);
        const double g_loss = trainer.generator_step(stop - start, cfg.noise_dim, rng);
        if (!std::isfinite(d_loss) || !std::isfinite(g_loss)) {
          throw ValidationError("GAN training diverged at epoch " + std::to_string(epoch + 1) +
                                " (member " + std::to_string(m + 1) + ")");
        }
      }
    }
    ens.generators.push_back(std::move(gen));
    ens.discriminators.push_back(std::move(dis));
  }

  std::vector<double> holdout_scores;
  holdout_scores.reserve(holdout.size());
  for (std::size_t idx : holdout) {
    double acc = 0.0;
    for (const auto& dis : ens.discriminators) acc += dis.forward(rows[idx])[0];
    holdout_scores.push_back(acc / static_cast<double>(ens.discriminators.size()));
  }
  std::tie(ens.interval_lo, ens.interval_hi) = conformal_interval(holdout_scores, cfg.alpha);
  return ens;
}

std::vector<Instance> gan_sample(const GanEnsemble& ens, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample count must be >= 1");
  if (ens.generators.empty()) throw ValidationError("unfitted ensemble");
  RngStream rng(seed, 0);
  std::vector<Instance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t member = rng.next_index(ens.generators.size());
    Vec z(ens.noise_dim);
    for (double& v : z) v = rng.next_gaussian();
    Instance inst;
    inst.id = "g" + std::to_string(i + 1);
    inst.features = ens.standardizer.invert(ens.generators[member].forward(z));
    out.push_back(std::move(inst));
  }
  return out;
}

Discrimination conformalized_discriminate(const GanEnsemble& ens, const Instance& x) {
  if (ens.discriminators.empty()) throw ValidationError("unfitted ensemble");
  Discrimination result;
  result.score = ens.score(x.features);
  result.synthetic = !(result.score >= ens.interval_lo && result.score <= ens.interval_hi);
  return result;
}

Dataset assemble_evolved(const Dataset& source, const std::vector<Instance>& generated_infected,
                         const std::vector<Instance>& generated_free,
                         const std::string& evolved_label) {
  if (source.label_set.size() != 2) {
    throw ValidationError("evolved assembly expects a two-label source dataset");
  }
  const auto counts = source.class_counts();
  for (std::size_t k = 0; k < 2; ++k) {
    if (counts[k] == 0) {
      throw ValidationError("source label '" + source.label_set.name(k) +
                            "' has no instances");
    }
  }
  for (const auto& gen : {&generated_infected, &generated_free}) {
    for (const auto& inst : *gen) {
      if (inst.features.size() != source.dim()) {
        throw ValidationError("generated instance " + inst.id + " has wrong dimension");
      }
    }
  }

  Dataset out;
  out.label_set = LabelSet({source.label_set.name(0), source.label_set.name(1), evolved_label});
  out.feature_names = source.feature_names;
  out.instances = source.instances;
  out.labels = source.labels;
  for (const auto& inst : generated_free) {
    out.instances.push_back({"gen-" + inst.id, inst.features});
    out.labels.push_back(0);
  }
  for (const auto& inst : generated_infected) {
    out.instances.push_back({"gen-" + inst.id, inst.features});
    out.labels.push_back(2);
  }
  return out;
}

namespace {

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    // Step both CDFs past the smaller head value (ties move together).
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    ks = std::max(ks, std::fabs(fa - fb));
  }
  return ks;
}

}  // namespace

std::vector<MarginalDiff> compare_marginals(const Dataset& real, const Dataset& synth) {
  if (real.dim() != synth.dim()) {
    throw ValidationError("dimension mismatch between real and synthetic datasets");
  }
  const Standardizer rs = Standardizer::fit(real);
  const Standardizer ss = Standardizer::fit(synth);
  std::vector<MarginalDiff> out;
  for (std::size_t j = 0; j < real.dim(); ++j) {
    MarginalDiff diff;
    diff.feature = real.feature_names[j];
    diff.mean_diff = ss.means[j] - rs.means[j];
    diff.stddev_ratio = ss.stds[j] / rs.stds[j];
    std::vector<double> a, b;
    a.reserve(real.size());
    b.reserve(synth.size());
    for (const auto& inst : real.instances) a.push_back(inst.features[j]);
    for (const auto& inst : synth.instances) b.push_back(inst.features[j]);
    diff.ks = ks_statistic(std::move(a), std::move(b));
    out.push_back(std::move(diff));
  }
  return out;
}

namespace {

nlohmann::json encode_bound(double v) {
  if (std::isinf(v)) return v > 0 ? nlohmann::json("+inf") : nlohmann::json("-inf");
  return nlohmann::json(v);
}

double decode_bound(const nlohmann::json& v, double sign) {
  if (v.is_string()) return sign * std::numeric_limits<double>::infinity();
  return v.get<double>();
}

}  // namespace

nlohmann::json GanEnsemble::to_json() const {
  nlohmann::json gens = nlohmann::json::array();
  nlohmann::json diss = nlohmann::json::array();
  for (const auto& g : generators) gens.push_back(g.to_json());
  for (const auto& d : discriminators) diss.push_back(d.to_json());
  return nlohmann::json{
      {"schema", kGanSchema},
      {"generators", gens},
      {"discriminators", diss},
      {"noise_dim", noise_dim},
      {"standardizer", {{"means", standardizer.means}, {"stds", standardizer.stds}}},
      {"feature_names", feature_names},
      {"interval", {{"lo", encode_bound(interval_lo)}, {"hi", encode_bound(interval_hi)}}},
      {"alpha", alpha},
      {"seed", seed},
  };
}

GanEnsemble GanEnsemble::from_json(const nlohmann::json& doc) {
  if (doc.value("schema", "") != kGanSchema) {
    throw ValidationError("not a GAN ensemble document");
  }
  GanEnsemble ens;
  for (const auto& g : doc.at("generators")) ens.generators.push_back(Mlp::from_json(g));
  for (const auto& d : doc.at("discriminators")) ens.discriminators.push_back(Mlp::from_json(d));
  if (ens.generators.size() != ens.discriminators.size() || ens.generators.empty()) {
    throw ValidationError("malformed GAN ensemble document");
  }
  ens.noise_dim = doc.at("noise_dim").get<std::size_t>();
  ens.standardizer.means = doc.at("standardizer").at("means").get<Vec>();
  ens.standardizer.stds = doc.at("standardizer").at("stds").get<Vec>();
  ens.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
  ens.interval_lo = decode_bound(doc.at("interval").at("lo"), -1.0);
  ens.interval_hi = decode_bound(doc.at("interval").at("hi"), 1.0);
  ens.alpha = doc.at("alpha").get<double>();
  ens.seed = doc.at("seed").get<std::uint64_t>();
  return ens;
}

}  // namespace rcp
