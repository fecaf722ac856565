#pragma once

#include <json.hpp>

#include "riskcp/linalg.hpp"
#include "riskcp/rng.hpp"

namespace rcp {

enum class Activation { Identity, Tanh, Sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Fully connected net with hand-derived backprop. Kept deliberately small:
/// the GAN's generator and discriminator are the only users and the gradient
/// path has to be checkable against finite differences.
class Mlp {
 public:
  struct Layer {
    Mat w;  // out x in
    Vec b;
    Activation act = Activation::Identity;
  };

  struct Cache {
    Vec input;
    std::vector<Vec> pre;
    std::vector<Vec> post;
  };

  struct Grads {
    std::vector<Mat> w;
    std::vector<Vec> b;

    void accumulate(const Grads& other);
    void scale(double factor);
  };

  Mlp() = default;

  /// sizes = {in, hidden..., out}; acts has one entry per weighted layer.
  /// Weights start at N(0, 1/sqrt(fan_in)), biases at zero.
  static Mlp create(const std::vector<std::size_t>& sizes,
                    const std::vector<Activation>& acts, RngStream& rng);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }

  Vec forward(const Vec& x) const;
  Vec forward(const Vec& x, Cache& cache) const;

  Grads zero_grads() const;

  /// Backpropagates grad_out and accumulates parameter gradients into grads
  /// (when non-null). Returns dL/d(input). grad_is_last_pre treats grad_out
  /// as the gradient at the last layer's pre-activation, which keeps
  /// sigmoid + cross-entropy numerically stable.
  Vec backward(const Cache& cache, Vec grad_out, bool grad_is_last_pre, Grads* grads) const;

  /// Flat parameter view for the finite-difference checks.
  Vec flatten_params() const;
  void set_params(const Vec& params);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& doc);

 private:
  std::vector<Layer> layers_;
};

/// Plain momentum SGD over an Mlp's parameters.
class MomentumSgd {
 public:
  MomentumSgd(const Mlp& net, double learning_rate, double momentum);
  void step(Mlp& net, const Mlp::Grads& grads);

 private:
  double lr_;
  double momentum_;
  Mlp::Grads velocity_;
};

double sigmoid(double t);
double softplus(double t);

}  // namespace rcp
