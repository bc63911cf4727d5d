#include "ksgan/metrics.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ksgan/error.hpp"
#include "ksgan/rng.hpp"
#include "ksgan/targets.hpp"

namespace ksgan::metrics {
namespace {

void require_points(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.dim(0) == 0) {
    throw ContractError(std::string(what) + ": expected a non-empty (n, d) point set, got " + shape_str(t.shape()));
  }
}

double kahan_sum(std::span<const double> values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

// Column-major copy so each coordinate is a contiguous array.
std::vector<Eigen::ArrayXd> columns(const Tensor& pts) {
  std::vector<Eigen::ArrayXd> cols(pts.dim(1), Eigen::ArrayXd(static_cast<Eigen::Index>(pts.dim(0))));
  for (std::size_t i = 0; i < pts.dim(0); ++i)
    for (std::size_t k = 0; k < pts.dim(1); ++k) cols[k][static_cast<Eigen::Index>(i)] = pts.at(i, k);
  return cols;
}

// Sum over all (i, j) of k(a_i, b_j); with `upper` only j > i is visited.
double kernel_sum(const Tensor& a, const Tensor& b, double gamma, bool upper, std::size_t threads) {
  const auto bcols = columns(b);
  const auto nb = static_cast<Eigen::Index>(b.dim(0));
  const std::size_t d = a.dim(1);
  std::vector<double> rows(a.dim(0), 0.0);
  parallel_for(a.dim(0), threads, [&](std::size_t begin, std::size_t end) {
    Eigen::ArrayXd d2(nb);
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Index start = upper ? static_cast<Eigen::Index>(i) + 1 : 0;
      const Eigen::Index len = nb - start;
      if (len <= 0) continue;
      auto acc = d2.head(len);
      acc = (bcols[0].segment(start, len) - a.at(i, 0)).square();
      for (std::size_t k = 1; k < d; ++k) acc += (bcols[k].segment(start, len) - a.at(i, k)).square();
      rows[i] = (acc * -gamma).exp().sum();
    }
  });
  return kahan_sum(rows);
}

}  // namespace

double median_heuristic_bandwidth(const Tensor& points, std::uint64_t seed) {
  if (points.rank() != 2 || points.dim(0) < 2) {
    throw ContractError("median heuristic needs at least two points");
  }
  const std::size_t n_all = points.dim(0);
  const std::size_t d = points.dim(1);
  std::vector<std::size_t> idx(n_all);
  for (std::size_t i = 0; i < n_all; ++i) idx[i] = i;
  if (n_all > kBandwidthSubsample) {
    Rng rng(seed);
    for (std::size_t i = 0; i < kBandwidthSubsample; ++i) std::swap(idx[i], idx[i + rng.below(n_all - i)]);
    idx.resize(kBandwidthSubsample);
  }
  const std::size_t n = idx.size();
  std::vector<double> dist2;
  dist2.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = points.at(idx[i], k) - points.at(idx[j], k);
        s += diff * diff;
      }
      dist2.push_back(s);
    }
  }
  const std::size_t mid = (dist2.size() - 1) / 2;
  std::nth_element(dist2.begin(), dist2.begin() + static_cast<std::ptrdiff_t>(mid), dist2.end());
  const double median = std::sqrt(dist2[mid]);
  if (!(median > 0.0)) throw ContractError("degenerate kernel: median pairwise distance is 0");
  return median;
}

MmdReport mmd2(const Tensor& a, const Tensor& b, double bandwidth, std::size_t threads) {
  require_points(a, "mmd2");
  require_points(b, "mmd2");
  if (a.dim(1) != b.dim(1)) {
    throw ContractError("mmd2: dimension mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ContractError("mmd2: bandwidth must be a positive finite number");
  }
  MmdReport report{0.0, bandwidth, a.dim(0), b.dim(0)};
  if (a == b) return report;

  const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
  const auto na = static_cast<double>(a.dim(0));
  const auto nb = static_cast<double>(b.dim(0));
  // Self terms: diagonal (k = 1) plus twice the strict upper triangle.
  const double saa = na + 2.0 * kernel_sum(a, a, gamma, true, threads);
  const double sbb = nb + 2.0 * kernel_sum(b, b, gamma, true, threads);
  const double sab = kernel_sum(a, b, gamma, false, threads);
  report.mmd2 = saa / (na * na) + sbb / (nb * nb) - 2.0 * sab / (na * nb);
  return report;
}

double ks_two_sample_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ContractError("ks_two_sample_1d: samples must be non-empty");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto nx = static_cast<std::int64_t>(x.size());
  const auto ny = static_cast<std::int64_t>(y.size());
  std::int64_t i = 0, j = 0, best = 0;
  while (i < nx || j < ny) {
    double v;
    if (j >= ny || (i < nx && x[i] <= y[j])) v = x[i];
    else v = y[j];
    while (i < nx && x[i] <= v) ++i;
    while (j < ny && y[j] <= v) ++j;
    best = std::max(best, std::abs(i * ny - j * nx));
  }
  return static_cast<double>(best) / (static_cast<double>(nx) * static_cast<double>(ny));
}

ModeCoverage mode_coverage_8gaussians(const Tensor& samples, double frac_threshold) {
  require_points(samples, "mode_coverage_8gaussians");
  if (samples.dim(1) != 2) throw ContractError("mode_coverage_8gaussians: expected 2-D samples");
  const auto centers = targets::eight_gaussian_centers();
  std::array<std::size_t, 8> counts{};
  std::array<double, 8> dist_sum{};
  for (std::size_t i = 0; i < samples.dim(0); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 8; ++k) {
      const double dx = samples.at(i, 0) - centers[k][0];
      const double dy = samples.at(i, 1) - centers[k][1];
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    ++counts[best];
    dist_sum[best] += best_d;
  }
  ModeCoverage out;
  const double n = static_cast<double>(samples.dim(0));
  const double radius = 3.0 * targets::kEightGaussiansStd;
  for (std::size_t k = 0; k < 8; ++k) {
    out.fractions[k] = static_cast<double>(counts[k]) / n;
    out.mean_distance[k] = counts[k] ? dist_sum[k] / static_cast<double>(counts[k]) : 0.0;
    if (counts[k] > 0 && out.fractions[k] >= frac_threshold && out.mean_distance[k] <= radius) ++out.count;
  }
  return out;
}

}  // namespace ksgan::metrics
