#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "ksgan/rng.hpp"
#include "ksgan/tensor.hpp"

namespace ksgan::targets {

enum class Source {
  Swissroll,
  Circles,
  Rings,
  Moons,
  EightGaussians,
  Pinwheel,
  TwoSpirals,
  Checkerboard,
  Latent,
  HalfNormal,
  Normal,
  Model,
  File,
};

inline constexpr std::array<Source, 8> kSyntheticTargets = {
    Source::Swissroll, Source::Circles,  Source::Rings,      Source::Moons,
    Source::EightGaussians, Source::Pinwheel, Source::TwoSpirals, Source::Checkerboard};

std::string_view source_name(Source source);
/// Parses one of the eight synthetic target names; throws ContractError
/// listing the valid names otherwise.
Source parse_target(std::string_view name);
std::optional<Source> try_parse_target(std::string_view name);
std::string valid_target_names();

/// A finite batch of points, shape (n, d).
struct SampleSet {
  Tensor points;
  Source source = Source::File;
  Rng rng{0};  // generator state the set was drawn with

  std::size_t size() const { return points.rank() ? points.dim(0) : 0; }
  std::size_t dim() const { return points.rank() > 1 ? points.dim(1) : 1; }
};

/// n i.i.d. N(0, I_dim) vectors (Box-Muller).
SampleSet sample_latent(std::size_t n, std::size_t dim, Rng& rng);

/// n points from one of the eight synthetic 2-D targets.
SampleSet sample_target(Source target, std::size_t n, Rng& rng);

/// First: n half-normal |N(0,1)| samples; second: n N(0,1) samples. Both 1-D.
std::pair<SampleSet, SampleSet> analytic_pair_chi_gaussian(std::size_t n, Rng& rng);

/// Centers of the 8gaussians mixture after the final 1/1.414 rescaling.
std::array<std::array<double, 2>, 8> eight_gaussian_centers();

inline constexpr double kEightGaussiansStd = 0.5 / 1.414;

}  // namespace ksgan::targets
