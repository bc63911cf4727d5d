#include "ksgan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "ksgan/error.hpp"

namespace ksgan::losses {
namespace {

// Keeps the Euclidean norm differentiable at a zero gradient.
constexpr double kGradNormEps = 1e-12;

ad::Var flatten(const ad::Var& c) {
  const Shape& s = c.shape();
  if (s.size() == 1) return c;
  if (s.size() == 2 && s[1] == 1) return ad::reshape(c, {s[0]});
  throw ContractError("critic values must have shape (n) or (n, 1), got " + shape_str(s));
}

ad::Var indicator(const ad::Var& c_row, const ad::Var& lambda_col, const GeneratorLossOptions& opt) {
  if (opt.indicator == IndicatorKind::Smooth) {
    return ad::sigmoid(ad::scale(ad::sub(lambda_col, c_row), 1.0 / opt.tau));
  }
  return ad::indicator_ste(c_row, lambda_col, opt.ste_clip);
}

// Fraction of `c` below each threshold: (m) values.
ad::Var coverage(const ad::Var& c, const ad::Var& lambda_col, const GeneratorLossOptions& opt) {
  const std::size_t n = c.shape()[0];
  return ad::mean(indicator(ad::reshape(c, {1, n}), lambda_col, opt), 1);
}

std::size_t first_argmax(const Tensor& t) {
  auto d = t.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

struct Sup {
  std::int64_t numerator = 0;  // |count_a * n_b - count_b * n_a|
  double lambda = 0.0;
};

// sup over thresholds of |#{a <= t}/n_a - #{b <= t}/n_b| (lower = true) or of
// |#{a >= t}/n_a - #{b >= t}/n_b|, on sorted inputs. Thresholds are visited in
// increasing order, so ties resolve to the smallest threshold.
Sup coverage_sup(const std::vector<double>& a, const std::vector<double>& b, bool lower) {
  const auto na = static_cast<std::int64_t>(a.size());
  const auto nb = static_cast<std::int64_t>(b.size());
  std::int64_t i = 0, j = 0;  // counts of values < t (or <= t after advancing)
  Sup best{-1, 0.0};
  while (i < na || j < nb) {
    const double t = (j >= nb || (i < na && a[i] <= b[j])) ? a[i] : b[j];
    std::int64_t gap;
    if (lower) {
      while (i < na && a[i] <= t) ++i;
      while (j < nb && b[j] <= t) ++j;
      gap = std::abs(i * nb - j * na);
    } else {
      gap = std::abs((na - i) * nb - (nb - j) * na);
      while (i < na && a[i] <= t) ++i;
      while (j < nb && b[j] <= t) ++j;
    }
    if (gap > best.numerator) best = {gap, t};
  }
  return best;
}

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

double count_le(const std::vector<double>& s, double t) {
  return static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin());
}
double count_ge(const std::vector<double>& s, double t) {
  return static_cast<double>(s.end() - std::lower_bound(s.begin(), s.end(), t));
}

// Forward-only hard-indicator loss from sorted counts.
GeneratorLossParts counted_loss(ad::Graph& g, const Tensor& c_F, const Tensor& c_G, std::span<const double> levels,
                                Aggregation mode) {
  const auto f = sorted(c_F.data());
  const auto gs = sorted(c_G.data());
  const double nf = static_cast<double>(f.size());
  const double ng = static_cast<double>(gs.size());
  Tensor gap_f({levels.size()}), gap_g({levels.size()});
  for (std::size_t k = 0; k < levels.size(); ++k) {
    gap_f[k] = std::fabs(count_le(gs, levels[k]) / ng - count_le(f, levels[k]) / nf);
    gap_g[k] = std::fabs(count_ge(f, levels[k]) / nf - count_ge(gs, levels[k]) / ng);
  }
  GeneratorLossParts parts;
  double lf, lg;
  if (mode == Aggregation::Max) {
    const std::size_t kf = first_argmax(gap_f);
    const std::size_t kg = first_argmax(gap_g);
    lf = gap_f[kf];
    lg = gap_g[kg];
    parts.argmax_lambda_f = levels[kf];
    parts.argmax_lambda_g = levels[kg];
  } else {
    lf = std::accumulate(gap_f.data().begin(), gap_f.data().end(), 0.0) / static_cast<double>(levels.size());
    lg = std::accumulate(gap_g.data().begin(), gap_g.data().end(), 0.0) / static_cast<double>(levels.size());
  }
  parts.loss_f = g.constant(Tensor::scalar(lf));
  parts.loss_g = g.constant(Tensor::scalar(lg));
  parts.total = g.constant(Tensor::scalar(lf + lg));
  return parts;
}

}  // namespace

std::vector<double> level_grid(std::span<const double> c_F, std::span<const double> c_G) {
  std::vector<double> out(c_F.begin(), c_F.end());
  out.insert(out.end(), c_G.begin(), c_G.end());
  std::sort(out.begin(), out.end());
  return out;
}

GeneratorLossParts generator_loss(const ad::Var& c_F, const ad::Var& c_G, const GeneratorLossOptions& options) {
  const ad::Var cf = flatten(c_F);
  const ad::Var cg = flatten(c_G);
  if (cf.shape()[0] == 0 || cg.shape()[0] == 0) throw ContractError("generator_loss: empty batch");
  const auto grid = level_grid(cf.value().data(), cg.value().data());
  return generator_loss_at_levels(cf, cg, grid, options);
}

GeneratorLossParts generator_loss_at_levels(const ad::Var& c_F, const ad::Var& c_G, std::span<const double> levels,
                                            const GeneratorLossOptions& options) {
  const ad::Var cf = flatten(c_F);
  const ad::Var cg = flatten(c_G);
  if (cf.shape()[0] == 0 || cg.shape()[0] == 0) throw ContractError("generator_loss: empty batch");
  if (levels.empty()) throw ContractError("generator_loss: empty level grid");
  if (options.indicator == IndicatorKind::Smooth && !(options.tau > 0.0)) {
    throw ContractError("generator_loss: smooth indicator needs tau > 0");
  }
  ad::Graph& g = *cf.graph();
  const bool needs_grad = g.grad_enabled() && (cf.requires_grad() || cg.requires_grad());
  if (!needs_grad && options.indicator == IndicatorKind::Ste) {
    return counted_loss(g, cf.value(), cg.value(), levels, options.mode);
  }
  const std::vector<double> grid(levels.begin(), levels.end());
  const std::size_t m = grid.size();
  const ad::Var lambda = g.constant(Tensor({m, 1}, grid));
  const ad::Var neg_lambda = ad::neg(lambda);

  const ad::Var gap_f = ad::abs(ad::sub(coverage(cg, lambda, options), coverage(cf, lambda, options)));
  const ad::Var gap_g =
      ad::abs(ad::sub(coverage(ad::neg(cf), neg_lambda, options), coverage(ad::neg(cg), neg_lambda, options)));

  GeneratorLossParts parts;
  if (options.mode == Aggregation::Max) {
    parts.loss_f = ad::max(gap_f);
    parts.loss_g = ad::max(gap_g);
    parts.argmax_lambda_f = grid[first_argmax(gap_f.value())];
    parts.argmax_lambda_g = grid[first_argmax(gap_g.value())];
  } else {
    parts.loss_f = ad::mean(gap_f);
    parts.loss_g = ad::mean(gap_g);
  }
  parts.total = ad::add(parts.loss_f, parts.loss_g);
  return parts;
}

ad::Var critic_loss(const ad::Var& c_F, const ad::Var& c_G) {
  const ad::Var cf = flatten(c_F);
  const ad::Var cg = flatten(c_G);
  if (cf.shape()[0] == 0 || cg.shape()[0] == 0) throw ContractError("critic_loss: empty batch");
  return ad::sub(ad::mean(cg), ad::mean(cf));
}

CriticWithPenalty critic_with_score_penalty(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F,
                                            const Tensor& x_G) {
  if (x_F.rank() != 2 || x_G.rank() != 2 || x_F.dim(0) == 0 || x_G.dim(0) == 0) {
    throw ContractError("score penalty needs non-empty (n, d) batches");
  }
  const std::size_t n_f = x_F.dim(0);
  const std::size_t n = n_f + x_G.dim(0);
  const Tensor parts[] = {x_F, x_G};
  const ad::Var x = graph.leaf(concat_rows(parts), true);
  const ad::Var c = flatten(critic(x));
  const ad::Var grad_x = ad::grad(ad::sum(c), {x}, true)[0];
  const ad::Var sq = ad::l2_norm_sq(grad_x);
  const ad::Var penalty =
      ad::add(ad::mean(ad::slice_rows(sq, n_f, n)), ad::mean(ad::slice_rows(sq, 0, n_f)));
  return {ad::slice_rows(c, 0, n_f), ad::slice_rows(c, n_f, n), penalty};
}

ad::Var score_penalty(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F, const Tensor& x_G) {
  return critic_with_score_penalty(graph, critic, x_F, x_G).penalty;
}

GksEstimate gks_from_values(std::span<const double> c_F, std::span<const double> c_G) {
  if (c_F.empty() || c_G.empty()) throw ContractError("gks_estimate: empty sample set");
  const auto f = sorted(c_F);
  const auto g = sorted(c_G);
  const double denom = static_cast<double>(f.size()) * static_cast<double>(g.size());
  const Sup lower = coverage_sup(f, g, true);
  const Sup upper = coverage_sup(f, g, false);
  GksEstimate est;
  est.loss_f = static_cast<double>(lower.numerator) / denom;
  est.loss_g = static_cast<double>(upper.numerator) / denom;
  if (upper.numerator > lower.numerator) {
    est.value = est.loss_g;
    est.lambda = upper.lambda;
    est.orientation = Orientation::G;
  } else {
    est.value = est.loss_f;
    est.lambda = lower.lambda;
    est.orientation = Orientation::F;
  }
  return est;
}

GksEstimate gks_estimate(const Tensor& points_F, const Tensor& points_G, const CriticEval& critic) {
  if (points_F.rank() != 2 || points_G.rank() != 2 || points_F.dim(0) == 0 || points_G.dim(0) == 0) {
    throw ContractError("gks_estimate: expected non-empty (n, d) sample sets");
  }
  if (points_F.dim(1) != points_G.dim(1)) {
    throw ContractError("gks_estimate: dimension mismatch " + shape_str(points_F.shape()) + " vs " +
                        shape_str(points_G.shape()));
  }
  const Tensor cf = critic(points_F);
  const Tensor cg = critic(points_G);
  return gks_from_values(cf.data(), cg.data());
}

AdversarialParts gan_losses(const ad::Var& d_F, const ad::Var& d_G, bool flip) {
  const ad::Var df = flatten(d_F);
  const ad::Var dg = flatten(d_G);
  AdversarialParts out;
  if (!flip) {
    out.critic = ad::add(ad::mean(ad::softplus(ad::neg(df))), ad::mean(ad::softplus(dg)));
    out.generator = ad::mean(ad::softplus(ad::neg(dg)));
  } else {
    out.critic = ad::add(ad::mean(ad::softplus(df)), ad::mean(ad::softplus(ad::neg(dg))));
    out.generator = ad::mean(ad::softplus(dg));
  }
  return out;
}

AdversarialParts wgan_gp_losses(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F, const ad::Var& x_G,
                                double gp_weight, const Tensor& eps) {
  const Tensor& xg = x_G.value();
  if (x_F.rank() != 2 || x_F.shape() != xg.shape() || x_F.dim(0) == 0) {
    throw ContractError("wgan_gp_losses: batches must be non-empty and of equal shape, got " +
                        shape_str(x_F.shape()) + " and " + shape_str(xg.shape()));
  }
  const std::size_t n = x_F.dim(0);
  const std::size_t d = x_F.dim(1);
  if (eps.size() != n) throw ContractError("wgan_gp_losses: need one interpolation weight per pair");
  Tensor hat({n, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) hat.at(i, k) = eps[i] * x_F.at(i, k) + (1.0 - eps[i]) * xg.at(i, k);

  const ad::Var x_hat = graph.leaf(std::move(hat), true);
  const ad::Var c_hat = flatten(critic(x_hat));
  const ad::Var grad_x = ad::grad(ad::sum(c_hat), {x_hat}, true)[0];
  const ad::Var norm = ad::sqrt(ad::add_scalar(ad::l2_norm_sq(grad_x), kGradNormEps));
  const ad::Var penalty = ad::mean(ad::square(ad::add_scalar(norm, -1.0)));

  const ad::Var c = flatten(critic(ad::concat({graph.constant(x_F), x_G})));
  const ad::Var c_f = ad::slice_rows(c, 0, n);
  const ad::Var c_g = ad::slice_rows(c, n, 2 * n);
  AdversarialParts out;
  out.penalty = penalty;
  out.critic = ad::add(critic_loss(c_f, c_g), ad::scale(penalty, gp_weight));
  out.generator = ad::neg(ad::mean(c_g));
  return out;
}

AdversarialParts wgan_gp_losses(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F, const ad::Var& x_G,
                                double gp_weight, Rng& rng) {
  Tensor eps({x_F.rank() ? x_F.dim(0) : 0});
  for (double& e : eps.data()) e = rng.uniform();
  return wgan_gp_losses(graph, critic, x_F, x_G, gp_weight, eps);
}

ChiGaussianDiscrepancy chi_gaussian_discrepancy(const targets::SampleSet& half_normal,
                                                const targets::SampleSet& normal) {
  if (half_normal.dim() != 1 || normal.dim() != 1) {
    throw ContractError("chi_gaussian_discrepancy: expected 1-D sample sets");
  }
  auto centered = [](const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::fabs(x[i]);
    return out;
  };
  auto half_line = [](const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = x[i] >= 0.0 ? x[i] : std::numeric_limits<double>::infinity();
    }
    return out;
  };
  const Tensor& f = half_normal.points;
  const Tensor& g = normal.points;
  const auto gf = centered(f), gg = centered(g);
  const auto hf = half_line(f), hg = half_line(g);
  ChiGaussianDiscrepancy out;
  out.one_sided_sup = gks_from_values(gf, gg).loss_f;
  out.symmetric_gks = std::max(out.one_sided_sup, gks_from_values(hf, hg).loss_f);
  return out;
}

}  // namespace ksgan::losses
