#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ksgan/autodiff.hpp"
#include "ksgan/nn.hpp"
#include "ksgan/rng.hpp"
#include "ksgan/tensor.hpp"

namespace ksgan::testing {

/// Running max |analytic - numeric| and max |numeric| over several tensors.
struct ErrorAccumulator {
  double diff = 0.0;
  double scale = 0.0;

  void add(const Tensor& analytic, const Tensor& numeric) {
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff = std::max(diff, std::fabs(analytic[i] - numeric[i]));
      scale = std::max(scale, std::fabs(numeric[i]));
    }
  }
  double relative(double floor = 1e-8) const { return diff / std::max(scale, floor); }
};

inline double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-8) {
  ErrorAccumulator acc;
  acc.add(analytic, numeric);
  return acc.relative(floor);
}

using Builder = std::function<ad::Var(ad::Graph&, const std::vector<ad::Var>&)>;

inline double evaluate_builder(const Builder& f, const std::vector<Tensor>& inputs) {
  ad::Graph g;
  std::vector<ad::Var> vars;
  for (const Tensor& t : inputs) vars.push_back(g.leaf(t, true));
  return f(g, vars).value().item();
}

/// Relative error, pooled over all inputs, between reverse-mode and central
/// finite-difference gradients of a scalar function.
inline double gradcheck(const Builder& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
  ad::Graph g;
  std::vector<ad::Var> vars;
  for (const Tensor& t : inputs) vars.push_back(g.leaf(t, true));
  const std::vector<Tensor> analytic = ad::grad_values(f(g, vars), vars);
  ErrorAccumulator acc;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor numeric(inputs[k].shape());
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[k][i] += h;
      minus[k][i] -= h;
      numeric[i] = (evaluate_builder(f, plus) - evaluate_builder(f, minus)) / (2.0 * h);
    }
    acc.add(analytic[k], numeric);
  }
  return acc.relative();
}

/// Scalar loss of a network whose parameters are bound on the given graph.
using ParamLoss = std::function<ad::Var(ad::Graph&, const nn::Bound&, nn::ParamStore&)>;

/// Same comparison pooled over every parameter of a store.
inline double gradcheck_params(const ParamLoss& f, const nn::ParamStore& store, double h = 1e-5) {
  auto eval = [&](const nn::ParamStore& s) {
    nn::ParamStore copy = s;
    ad::Graph g;
    const nn::Bound b = nn::bind(g, copy, false);
    return f(g, b, copy).value().item();
  };
  nn::ParamStore work = store;
  ad::Graph g;
  const nn::Bound bound = nn::bind(g, work, true);
  const auto analytic = nn::gradients(f(g, bound, work), bound);
  ErrorAccumulator acc;
  for (const auto& [name, value] : store.params) {
    Tensor numeric(value.shape());
    for (std::size_t i = 0; i < value.size(); ++i) {
      nn::ParamStore plus = store, minus = store;
      plus.params[name][i] += h;
      minus.params[name][i] -= h;
      numeric[i] = (eval(plus) - eval(minus)) / (2.0 * h);
    }
    acc.add(analytic.at(name), numeric);
  }
  return acc.relative();
}

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline Tensor normal_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

}  // namespace ksgan::testing
