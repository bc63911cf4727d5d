#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "ksgan/tensor.hpp"
#include "ksgan/threads.hpp"

namespace ksgan::metrics {

struct MmdReport {
  double mmd2 = 0.0;
  double bandwidth = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Above this many points the bandwidth is computed on a seeded subsample.
inline constexpr std::size_t kBandwidthSubsample = 16384;

/// Lower median of all pairwise Euclidean distances of the rows of `points`.
/// Throws ContractError for fewer than two points or a zero median.
double median_heuristic_bandwidth(const Tensor& points, std::uint64_t seed = 0);

/// Biased (V-statistic) squared MMD with kernel exp(-|x - y|^2 / (2 sigma^2)).
/// Row sums are computed independently and reduced in index order with
/// compensated summation, so the result does not depend on `threads`.
MmdReport mmd2(const Tensor& a, const Tensor& b, double bandwidth, std::size_t threads = worker_threads());

/// Two-sample Kolmogorov-Smirnov statistic sup |ECDF_a - ECDF_b|, exact.
double ks_two_sample_1d(std::span<const double> a, std::span<const double> b);

struct ModeCoverage {
  std::size_t count = 0;
  std::array<double, 8> fractions{};
  std::array<double, 8> mean_distance{};
};

/// Assigns each 2-D sample to its nearest 8gaussians center. A mode counts
/// when it holds at least `frac_threshold` of the samples and its points sit
/// on average within three component standard deviations of the center.
ModeCoverage mode_coverage_8gaussians(const Tensor& samples, double frac_threshold);

}  // namespace ksgan::metrics
