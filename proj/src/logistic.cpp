#include "riskcp/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskcp/error.hpp"
#include "riskcp/rng.hpp"

namespace rcp {

namespace detail {

Vec softmax(Vec logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

namespace {

Vec class_logits(const Mat& x, std::size_t row, std::size_t k_classes, const Vec& params) {
  const std::size_t d = x.cols;
  Vec logits(k_classes, 0.0);
  for (std::size_t k = 0; k < k_classes; ++k) {
    double s = params[k_classes * d + k];  // bias
    const double* w = &params[k * d];
    const double* xr = &x.a[row * d];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * xr[j];
    logits[k] = s;
  }
  return logits;
}

}  // namespace

double logistic_loss(const Mat& x, const std::vector<std::size_t>& y, std::size_t k_classes,
                     const Vec& params, double l2) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec p = softmax(class_logits(x, i, k_classes, params));
    loss -= std::log(std::max(p[y[i]], 1e-300));
  }
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (std::size_t w = 0; w < k_classes * d; ++w) reg += params[w] * params[w];
  return loss + 0.5 * l2 * reg;
}

Vec logistic_grad(const Mat& x, const std::vector<std::size_t>& y, std::size_t k_classes,
                  const Vec& params, double l2) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  Vec grad(params.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec p = softmax(class_logits(x, i, k_classes, params));
    const double* xr = &x.a[i * d];
    for (std::size_t k = 0; k < k_classes; ++k) {
      const double delta = p[k] - (y[i] == k ? 1.0 : 0.0);
      double* gw = &grad[k * d];
      for (std::size_t j = 0; j < d; ++j) gw[j] += delta * xr[j];
      grad[k_classes * d + k] += delta;
    }
  }
  for (double& g : grad) g /= static_cast<double>(n);
  for (std::size_t w = 0; w < k_classes * d; ++w) grad[w] += l2 * params[w];
  return grad;
}

}  // namespace detail

LogisticModel::LogisticModel(LabelSet labels, std::vector<std::string> feature_names,
                             Mat weights, Vec bias, Standardizer standardizer,
                             TrainConfig config)
    : labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      weights_(std::move(weights)),
      bias_(std::move(bias)),
      standardizer_(std::move(standardizer)),
      config_(config) {}

std::vector<double> LogisticModel::predict_proba(const Instance& x) const {
  const Vec z = standardizer_.apply(x.features);
  Vec logits = matvec(weights_, z);
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += bias_[k];
  return detail::softmax(std::move(logits));
}

nlohmann::json LogisticModel::to_json() const {
  return nlohmann::json{
      {"label_set", labels_.names()},
      {"feature_names", feature_names_},
      {"weights", weights_.a},
      {"bias", bias_},
      {"standardizer", {{"means", standardizer_.means}, {"stds", standardizer_.stds}}},
      {"metadata",
       {{"type", "logistic"},
        {"seed", config_.seed},
        {"config",
         {{"learning_rate", config_.learning_rate},
          {"epochs", config_.epochs},
          {"l2", config_.l2},
          {"batch_size", config_.batch_size}}}}},
  };
}

std::unique_ptr<LogisticModel> LogisticModel::from_json(const nlohmann::json& doc) {
  LabelSet labels(doc.at("label_set").get<std::vector<std::string>>());
  auto feature_names = doc.at("feature_names").get<std::vector<std::string>>();
  const std::size_t k_classes = labels.size();
  const std::size_t d = feature_names.size();
  Mat w(k_classes, d);
  w.a = doc.at("weights").get<std::vector<double>>();
  if (w.a.size() != k_classes * d) throw ValidationError("malformed logistic model JSON");
  Standardizer s;
  s.means = doc.at("standardizer").at("means").get<Vec>();
  s.stds = doc.at("standardizer").at("stds").get<Vec>();
  TrainConfig cfg;
  const auto& meta = doc.at("metadata");
  cfg.seed = meta.at("seed").get<std::uint64_t>();
  cfg.learning_rate = meta.at("config").at("learning_rate").get<double>();
  cfg.epochs = meta.at("config").at("epochs").get<std::size_t>();
  cfg.l2 = meta.at("config").at("l2").get<double>();
  cfg.batch_size = meta.at("config").at("batch_size").get<std::size_t>();
  return std::make_unique<LogisticModel>(std::move(labels), std::move(feature_names),
                                         std::move(w), doc.at("bias").get<Vec>(),
                                         std::move(s), cfg);
}

std::unique_ptr<LogisticModel> fit_logistic(const Dataset& train, const TrainConfig& cfg) {
  const std::size_t n = train.size();
  const std::size_t d = train.dim();
  const std::size_t k_classes = train.label_set.size();
  if (n == 0) throw ValidationError("empty training dataset");

  const auto counts = train.class_counts();
  for (std::size_t k = 0; k < k_classes; ++k) {
    if (counts[k] == 0) {
      throw ValidationError("class '" + train.label_set.name(k) +
                            "' absent from training data");
    }
  }

  const Standardizer standardizer = Standardizer::fit(train);
  Mat x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec z = standardizer.apply(train.instances[i].features);
    std::copy(z.begin(), z.end(), x.a.begin() + static_cast<std::ptrdiff_t>(i * d));
  }

  Vec params(k_classes * d + k_classes, 0.0);
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);

  RngStream rng(cfg.seed, 0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      Mat xb(stop - start, d);
      std::vector<std::size_t> yb(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        std::copy(x.a.begin() + static_cast<std::ptrdiff_t>(order[i] * d),
                  x.a.begin() + static_cast<std::ptrdiff_t>((order[i] + 1) * d),
                  xb.a.begin() + static_cast<std::ptrdiff_t>((i - start) * d));
        yb[i - start] = train.labels[order[i]];
      }
      const Vec grad = detail::logistic_grad(xb, yb, k_classes, params, cfg.l2);
      for (std::size_t w = 0; w < params.size(); ++w) {
        params[w] -= cfg.learning_rate * grad[w];
        if (!std::isfinite(params[w])) {
          throw ValidationError("logistic training diverged at epoch " +
                                std::to_string(epoch + 1));
        }
      }
    }
  }

  Mat weights(k_classes, d);
  std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(k_classes * d),
            weights.a.begin());
  Vec bias(params.begin() + static_cast<std::ptrdiff_t>(k_classes * d), params.end());
  return std::make_unique<LogisticModel>(train.label_set, train.feature_names,
                                         std::move(weights), std::move(bias), standardizer,
                                         cfg);
}

std::unique_ptr<ScoreModel> fit_logistic_ensemble(const Dataset& train,
                                                  const TrainConfig& cfg,
                                                  std::size_t members) {
  if (members == 0) throw ValidationError("ensemble needs at least one member");
  std::vector<std::unique_ptr<ScoreModel>> fitted;
  for (std::size_t m = 0; m < members; ++m) {
    RngStream rng(cfg.seed, m + 1);
    Dataset boot;
    boot.label_set = train.label_set;
    boot.feature_names = train.feature_names;
    // Resample until every class is present so each member can be fitted.
    for (int attempt = 0; attempt < 64; ++attempt) {
      boot.instances.clear();
      boot.labels.clear();
      for (std::size_t i = 0; i < train.size(); ++i) {
        const std::size_t pick = rng.next_index(train.size());
        boot.instances.push_back(train.instances[pick]);
        boot.labels.push_back(train.labels[pick]);
      }
      const auto counts = boot.class_counts();
      if (std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; })) {
        break;
      }
    }
    TrainConfig member_cfg = cfg;
    member_cfg.seed = cfg.seed ^ (0x9E3779B97F4A7C15ULL * (m + 1));
    fitted.push_back(fit_logistic(boot, member_cfg));
  }
  return make_ensemble(std::move(fitted));
}

}  // namespace rcp
