#include "riskcp/mlp.hpp"

#include <cmath>

#include "riskcp/error.hpp"

namespace rcp {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ValidationError("unknown activation '" + name + "'");
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double softplus(double t) {
  // log(1 + e^t) without overflow for large |t|.
  return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
}

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::Identity: return v;
    case Activation::Tanh: return std::tanh(v);
    case Activation::Sigmoid: return sigmoid(v);
  }
  return v;
}

// Derivative expressed through the post-activation value.
double activate_deriv(Activation a, double post) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::Sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

}  // namespace

void Mlp::Grads::accumulate(const Grads& other) {
  for (std::size_t l = 0; l < w.size(); ++l) {
    for (std::size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] += other.w[l].a[i];
    for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += other.b[l][i];
  }
}

void Mlp::Grads::scale(double factor) {
  for (auto& m : w) {
    for (double& v : m.a) v *= factor;
  }
  for (auto& v : b) {
    for (double& e : v) e *= factor;
  }
}

Mlp Mlp::create(const std::vector<std::size_t>& sizes, const std::vector<Activation>& acts,
                RngStream& rng) {
  if (sizes.size() < 2 || acts.size() != sizes.size() - 1) {
    throw ValidationError("inconsistent MLP shape specification");
  }
  Mlp net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer layer;
    layer.w = Mat(sizes[l + 1], sizes[l]);
    layer.b.assign(sizes[l + 1], 0.0);
    layer.act = acts[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (double& v : layer.w.a) v = scale * rng.next_gaussian();
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

std::size_t Mlp::input_dim() const { return layers_.front().w.cols; }
std::size_t Mlp::output_dim() const { return layers_.back().w.rows; }

Vec Mlp::forward(const Vec& x) const {
  Vec h = x;
  for (const auto& layer : layers_) {
    Vec pre = matvec(layer.w, h);
    for (std::size_t i = 0; i < pre.size(); ++i) {
      pre[i] = activate(layer.act, pre[i] + layer.b[i]);
    }
    h = std::move(pre);
  }
  return h;
}

Vec Mlp::forward(const Vec& x, Cache& cache) const {
  cache.input = x;
  cache.pre.assign(layers_.size(), {});
  cache.post.assign(layers_.size(), {});
  Vec h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Vec pre = matvec(layer.w, h);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += layer.b[i];
    Vec post(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) post[i] = activate(layer.act, pre[i]);
    cache.pre[l] = std::move(pre);
    h = post;
    cache.post[l] = std::move(post);
  }
  return h;
}

Mlp::Grads Mlp::zero_grads() const {
  Grads g;
  for (const auto& layer : layers_) {
    g.w.emplace_back(layer.w.rows, layer.w.cols);
    g.b.emplace_back(layer.b.size(), 0.0);
  }
  return g;
}

Vec Mlp::backward(const Cache& cache, Vec grad_out, bool grad_is_last_pre,
                  Grads* grads) const {
  Vec grad = std::move(grad_out);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    Vec grad_pre(grad.size());
    if (l == layers_.size() - 1 && grad_is_last_pre) {
      grad_pre = grad;
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        grad_pre[i] = grad[i] * activate_deriv(layer.act, cache.post[l][i]);
      }
    }
    const Vec& input = (l == 0) ? cache.input : cache.post[l - 1];
    if (grads) {
      Mat& gw = grads->w[l];
      for (std::size_t i = 0; i < layer.w.rows; ++i) {
        for (std::size_t j = 0; j < layer.w.cols; ++j) {
          gw(i, j) += grad_pre[i] * input[j];
        }
      }
      for (std::size_t i = 0; i < layer.b.size(); ++i) grads->b[l][i] += grad_pre[i];
    }
    grad = matvec_t(layer.w, grad_pre);
  }
  return grad;
}

Vec Mlp::flatten_params() const {
  Vec out;
  for (const auto& layer : layers_) {
    out.insert(out.end(), layer.w.a.begin(), layer.w.a.end());
    out.insert(out.end(), layer.b.begin(), layer.b.end());
  }
  return out;
}

void Mlp::set_params(const Vec& params) {
  std::size_t pos = 0;
  for (auto& layer : layers_) {
    for (double& v : layer.w.a) v = params.at(pos++);
    for (double& v : layer.b) v = params.at(pos++);
  }
  if (pos != params.size()) throw ValidationError("parameter vector size mismatch");
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    layers.push_back({{"rows", layer.w.rows},
                      {"cols", layer.w.cols},
                      {"w", layer.w.a},
                      {"b", layer.b},
                      {"act", activation_name(layer.act)}});
  }
  return nlohmann::json{{"layers", layers}};
}

Mlp Mlp::from_json(const nlohmann::json& doc) {
  Mlp net;
  for (const auto& l : doc.at("layers")) {
    Layer layer;
    layer.w = Mat(l.at("rows").get<std::size_t>(), l.at("cols").get<std::size_t>());
    layer.w.a = l.at("w").get<std::vector<double>>();
    layer.b = l.at("b").get<Vec>();
    layer.act = activation_from_name(l.at("act").get<std::string>());
    if (layer.w.a.size() != layer.w.rows * layer.w.cols ||
        layer.b.size() != layer.w.rows) {
      throw ValidationError("malformed MLP JSON");
    }
    net.layers_.push_back(std::move(layer));
  }
  if (net.layers_.empty()) throw ValidationError("malformed MLP JSON");
  return net;
}

MomentumSgd::MomentumSgd(const Mlp& net, double learning_rate, double momentum)
    : lr_(learning_rate), momentum_(momentum), velocity_(net.zero_grads()) {}

void MomentumSgd::step(Mlp& net, const Mlp::Grads& grads) {
  Vec params = net.flatten_params();
  std::size_t pos = 0;
  for (std::size_t l = 0; l < velocity_.w.size(); ++l) {
    for (std::size_t i = 0; i < velocity_.w[l].a.size(); ++i) {
      double& v = velocity_.w[l].a[i];
      v = momentum_ * v - lr_ * grads.w[l].a[i];
      params[pos++] += v;
    }
    for (std::size_t i = 0; i < velocity_.b[l].size(); ++i) {
      double& v = velocity_.b[l][i];
      v = momentum_ * v - lr_ * grads.b[l][i];
      params[pos++] += v;
    }
  }
  net.set_params(params);
}

}  // namespace rcp
