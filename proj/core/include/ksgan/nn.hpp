#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ksgan/autodiff.hpp"
#include "ksgan/rng.hpp"
#include "ksgan/tensor.hpp"

namespace ksgan::nn {

enum class Activation { Relu, LeakyRelu };

inline constexpr double kLeakySlope = 0.2;

/// Fully connected network: Linear -> act -> ... -> Linear (no activation on
/// the last layer).
struct MlpSpec {
  std::size_t in_dim = 1;
  std::vector<std::size_t> hidden;
  std::size_t out_dim = 1;
  Activation activation = Activation::Relu;
  bool bias = true;
  bool spectral_norm = false;

  std::size_t num_layers() const { return hidden.size() + 1; }
  std::size_t layer_in(std::size_t layer) const { return layer == 0 ? in_dim : hidden[layer - 1]; }
  std::size_t layer_out(std::size_t layer) const {
    return layer == hidden.size() ? out_dim : hidden[layer];
  }
  void validate() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

std::string weight_name(std::size_t layer);
std::string bias_name(std::size_t layer);

struct AdamState {
  Tensor m;
  Tensor v;
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Named parameters plus optimizer and spectral-norm state. Weights are
/// stored (fan_in, fan_out) so a layer computes x * W + b.
struct ParamStore {
  std::map<std::string, Tensor> params;
  std::map<std::string, AdamState> adam;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> sn_u;  // keyed by weight name, length fan_out

  double squared_norm() const;
  friend bool operator==(const ParamStore&, const ParamStore&) = default;
};

/// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); Adam state zeroed.
ParamStore init(const MlpSpec& spec, Rng& rng);

using Bound = std::map<std::string, ad::Var>;

/// Places every parameter on the graph as a leaf.
Bound bind(ad::Graph& graph, const ParamStore& store, bool requires_grad = true);

/// Batched forward pass for x of shape (n, in_dim). With spectral norm and
/// update_sn, one power-iteration step runs per weight and u is written back
/// to the store.
ad::Var forward(const MlpSpec& spec, ParamStore& store, const Bound& bound, const ad::Var& x,
                bool update_sn = true);

/// Forward without recording gradients or touching the store.
Tensor evaluate(const MlpSpec& spec, const ParamStore& store, const Tensor& x);

/// Gradient of a scalar loss with respect to every bound parameter that
/// requires grad.
std::map<std::string, Tensor> gradients(const ad::Var& loss, const Bound& bound);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Bias-corrected Adam, in place. Increments store.step once.
void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, const AdamConfig& config);

/// One power-iteration step on W (fan_in, fan_out) starting from u
/// (fan_out): v = normalize(W u), u = normalize(W^T v). Updates u, optionally
/// reports v, and returns the singular-value estimate v^T W u.
double power_iteration(const Tensor& weight, Tensor& u, Tensor* v_out = nullptr);

}  // namespace ksgan::nn
