#include "ksgan/nn.hpp"

#include <cmath>

#include "ksgan/error.hpp"

namespace ksgan::nn {
namespace {

constexpr double kNormEps = 1e-12;

void normalize(Tensor& t) {
  const double n = std::sqrt(t.squared_norm());
  for (double& v : t.data()) v /= std::max(n, kNormEps);
}

// v = normalize(W u) with W stored (fan_in, fan_out).
Tensor left_vector(const Tensor& w, const Tensor& u) {
  Tensor v({w.dim(0)});
  for (std::size_t i = 0; i < w.dim(0); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.dim(1); ++j) s += w.at(i, j) * u[j];
    v[i] = s;
  }
  normalize(v);
  return v;
}

ad::Var normalized_weight(ad::Graph& g, const ad::Var& w, const Tensor& u, const Tensor& v) {
  const ad::Var v_row = g.constant(v.reshaped({1, v.size()}));
  const ad::Var u_col = g.constant(u.reshaped({u.size(), 1}));
  const ad::Var sigma = ad::reshape(ad::matmul(ad::matmul(v_row, w), u_col), {});
  return ad::div(w, sigma);
}

ad::Var forward_impl(const MlpSpec& spec, const Bound& bound, const ad::Var& x,
                     std::map<std::string, Tensor>& sn_u, bool update_sn) {
  if (x.shape().size() != 2 || x.shape()[1] != spec.in_dim) {
    throw ContractError("mlp forward: expected input (n, " + std::to_string(spec.in_dim) + "), got " +
                        shape_str(x.shape()));
  }
  ad::Graph& g = *x.graph();
  ad::Var h = x;
  for (std::size_t layer = 0; layer < spec.num_layers(); ++layer) {
    const std::string wname = weight_name(layer);
    ad::Var w = bound.at(wname);
    if (spec.spectral_norm) {
      Tensor& u = sn_u.at(wname);
      Tensor v;
      if (update_sn) {
        power_iteration(w.value(), u, &v);
      } else {
        v = left_vector(w.value(), u);
      }
      w = normalized_weight(g, w, u, v);
    }
    h = ad::matmul(h, w);
    if (spec.bias) h = ad::add(h, bound.at(bias_name(layer)));
    if (layer + 1 < spec.num_layers()) {
      h = spec.activation == Activation::Relu ? ad::relu(h) : ad::leaky_relu(h, kLeakySlope);
    }
  }
  return h;
}

}  // namespace

void MlpSpec::validate() const {
  if (in_dim < 1 || out_dim < 1) throw ContractError("mlp dims must be >= 1");
  for (std::size_t h : hidden) {
    if (h < 1) throw ContractError("mlp hidden dims must be >= 1");
  }
}

std::string weight_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".weight"; }
std::string bias_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".bias"; }

double ParamStore::squared_norm() const {
  double s = 0.0;
  for (const auto& [name, t] : params) s += t.squared_norm();
  return s;
}

ParamStore init(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  ParamStore store;
  for (std::size_t layer = 0; layer < spec.num_layers(); ++layer) {
    const std::size_t fan_in = spec.layer_in(layer);
    const std::size_t fan_out = spec.layer_out(layer);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w({fan_in, fan_out});
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    store.params[weight_name(layer)] = std::move(w);
    if (spec.bias) {
      Tensor b({fan_out});
      for (double& v : b.data()) v = rng.uniform(-bound, bound);
      store.params[bias_name(layer)] = std::move(b);
    }
    if (spec.spectral_norm) {
      Tensor u({fan_out});
      for (double& v : u.data()) v = rng.normal();
      normalize(u);
      store.sn_u[weight_name(layer)] = std::move(u);
    }
  }
  for (const auto& [name, t] : store.params) store.adam[name] = {Tensor(t.shape()), Tensor(t.shape())};
  return store;
}

Bound bind(ad::Graph& graph, const ParamStore& store, bool requires_grad) {
  Bound bound;
  for (const auto& [name, t] : store.params) bound.emplace(name, graph.leaf(t, requires_grad));
  return bound;
}

ad::Var forward(const MlpSpec& spec, ParamStore& store, const Bound& bound, const ad::Var& x, bool update_sn) {
  return forward_impl(spec, bound, x, store.sn_u, update_sn);
}

Tensor evaluate(const MlpSpec& spec, const ParamStore& store, const Tensor& x) {
  ad::Graph g;
  ad::NoGradGuard guard(g);
  const Bound bound = bind(g, store, false);
  auto sn_u = store.sn_u;
  return forward_impl(spec, bound, g.constant(x), sn_u, false).value();
}

std::map<std::string, Tensor> gradients(const ad::Var& loss, const Bound& bound) {
  std::vector<std::string> names;
  std::vector<ad::Var> vars;
  for (const auto& [name, v] : bound) {
    if (!v.requires_grad()) continue;
    names.push_back(name);
    vars.push_back(v);
  }
  auto values = ad::grad_values(loss, vars);
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace(names[i], std::move(values[i]));
  return out;
}

void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, const AdamConfig& config) {
  for (const auto& [name, g] : grads) {
    auto it = store.params.find(name);
    if (it == store.params.end()) throw ContractError("adam_step: unknown parameter '" + name + "'");
    if (it->second.shape() != g.shape()) {
      throw ContractError("adam_step: shape mismatch for '" + name + "': " + shape_str(it->second.shape()) +
                          " vs " + shape_str(g.shape()));
    }
  }
  ++store.step;
  const double t = static_cast<double>(store.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor& p = store.params.at(name);
    AdamState& s = store.adam[name];
    if (s.m.shape() != p.shape()) s = {Tensor(p.shape()), Tensor(p.shape())};
    auto pd = p.data();
    auto md = s.m.data();
    auto vd = s.v.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = config.beta1 * md[i] + (1.0 - config.beta1) * gd[i];
      vd[i] = config.beta2 * vd[i] + (1.0 - config.beta2) * gd[i] * gd[i];
      const double m_hat = md[i] / c1;
      const double v_hat = vd[i] / c2;
      pd[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

double power_iteration(const Tensor& weight, Tensor& u, Tensor* v_out) {
  if (weight.rank() != 2 || u.size() != weight.dim(1)) {
    throw ContractError("power_iteration: weight " + shape_str(weight.shape()) + " vs u " + shape_str(u.shape()));
  }
  const Tensor v = left_vector(weight, u);
  Tensor next({weight.dim(1)});
  for (std::size_t j = 0; j < weight.dim(1); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < weight.dim(0); ++i) s += weight.at(i, j) * v[i];
    next[j] = s;
  }
  normalize(next);
  u = std::move(next);
  double sigma = 0.0;
  for (std::size_t i = 0; i < weight.dim(0); ++i)
    for (std::size_t j = 0; j < weight.dim(1); ++j) sigma += v[i] * weight.at(i, j) * u[j];
  if (v_out) *v_out = v;
  return sigma;
}

}  // namespace ksgan::nn
