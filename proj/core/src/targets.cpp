#include "ksgan/targets.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "ksgan/error.hpp"

namespace ksgan::targets {
namespace {

using std::numbers::pi;

struct NamedSource {
  std::string_view name;
  Source source;
};

constexpr NamedSource kNames[] = {
    {"swissroll", Source::Swissroll},        {"circles", Source::Circles},
    {"rings", Source::Rings},                {"moons", Source::Moons},
    {"8gaussians", Source::EightGaussians},  {"pinwheel", Source::Pinwheel},
    {"2spirals", Source::TwoSpirals},        {"checkerboard", Source::Checkerboard},
    {"latent", Source::Latent},              {"halfnormal", Source::HalfNormal},
    {"normal", Source::Normal},              {"model", Source::Model},
    {"file", Source::File},
};

void require_n(std::size_t n) {
  if (n < 1) throw ContractError("sample size must be >= 1");
}

// Component labels with equal counts (remainder to the first components),
// shuffled so that any prefix of the set is a fair subsample.
std::vector<std::size_t> balanced_labels(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i * k / n;
  for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);
  return labels;
}

void swissroll(Tensor& out, Rng& rng) {
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double t = 1.5 * pi * (1.0 + 2.0 * rng.uniform());
    const double x = t * std::cos(t) + rng.normal();
    const double y = t * std::sin(t) + rng.normal();
    out.at(i, 0) = x / 5.0;
    out.at(i, 1) = y / 5.0;
  }
}

void circles(Tensor& out, Rng& rng) {
  const auto labels = balanced_labels(out.dim(0), 2, rng);
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double r = labels[i] == 0 ? 1.0 : 0.5;
    const double theta = 2.0 * pi * rng.uniform();
    out.at(i, 0) = 3.0 * (r * std::cos(theta) + 0.08 * rng.normal());
    out.at(i, 1) = 3.0 * (r * std::sin(theta) + 0.08 * rng.normal());
  }
}

void rings(Tensor& out, Rng& rng) {
  static constexpr double kRadii[] = {1.0, 0.75, 0.5, 0.25};
  const auto labels = balanced_labels(out.dim(0), 4, rng);
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double theta = 2.0 * pi * rng.uniform();
    const double r = 3.0 * kRadii[labels[i]];
    out.at(i, 0) = r * std::cos(theta) + 0.08 * rng.normal();
    out.at(i, 1) = r * std::sin(theta) + 0.08 * rng.normal();
  }
}

void moons(Tensor& out, Rng& rng) {
  const auto labels = balanced_labels(out.dim(0), 2, rng);
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double theta = pi * rng.uniform();
    double x, y;
    if (labels[i] == 0) {
      x = std::cos(theta);
      y = std::sin(theta);
    } else {
      x = 1.0 - std::cos(theta);
      y = 1.0 - std::sin(theta) - 0.5;
    }
    x += 0.1 * rng.normal();
    y += 0.1 * rng.normal();
    out.at(i, 0) = 2.0 * x - 1.0;
    out.at(i, 1) = 2.0 * y - 0.2;
  }
}

void eight_gaussians(Tensor& out, Rng& rng) {
  const double s = 1.0 / std::sqrt(2.0);
  const double centers[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {s, s}, {s, -s}, {-s, s}, {-s, -s}};
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double px = 0.5 * rng.normal();
    const double py = 0.5 * rng.normal();
    const auto& c = centers[rng.below(8)];
    out.at(i, 0) = (px + 4.0 * c[0]) / 1.414;
    out.at(i, 1) = (py + 4.0 * c[1]) / 1.414;
  }
}

void pinwheel(Tensor& out, Rng& rng) {
  constexpr std::size_t kArms = 5;
  const auto labels = balanced_labels(out.dim(0), kArms, rng);
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double fx = 0.3 * rng.normal() + 1.0;
    const double fy = 0.1 * rng.normal();
    const double angle = 2.0 * pi * static_cast<double>(labels[i]) / kArms + 0.25 * std::exp(fx);
    const double c = std::cos(angle), s = std::sin(angle);
    // Row vector times [[c, -s], [s, c]].
    out.at(i, 0) = 2.0 * (fx * c + fy * s);
    out.at(i, 1) = 2.0 * (-fx * s + fy * c);
  }
}

void two_spirals(Tensor& out, Rng& rng) {
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double r = std::sqrt(rng.uniform()) * 540.0 * (2.0 * pi) / 360.0;
    const double px = -std::cos(r) * r + 0.5 * rng.uniform();
    const double py = std::sin(r) * r + 0.5 * rng.uniform();
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    out.at(i, 0) = sign * px / 3.0 + 0.1 * rng.normal();
    out.at(i, 1) = sign * py / 3.0 + 0.1 * rng.normal();
  }
}

void checkerboard(Tensor& out, Rng& rng) {
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    const double x1 = 4.0 * rng.uniform() - 2.0;
    const double v = rng.uniform();
    const double w = static_cast<double>(rng.below(2));
    double parity = std::fmod(std::floor(x1), 2.0);
    if (parity < 0) parity += 2.0;
    const double x2 = v - 2.0 * w + parity;
    out.at(i, 0) = 2.0 * x1;
    out.at(i, 1) = 2.0 * x2;
  }
}

}  // namespace

std::string_view source_name(Source source) {
  for (const auto& n : kNames)
    if (n.source == source) return n.name;
  return "?";
}

std::optional<Source> try_parse_target(std::string_view name) {
  for (Source s : kSyntheticTargets)
    if (source_name(s) == name) return s;
  return std::nullopt;
}

std::string valid_target_names() {
  std::string out;
  for (Source s : kSyntheticTargets) {
    if (!out.empty()) out += ", ";
    out += source_name(s);
  }
  return out;
}

Source parse_target(std::string_view name) {
  if (auto s = try_parse_target(name)) return *s;
  throw ContractError("unknown target '" + std::string(name) + "'; valid targets: " + valid_target_names());
}

SampleSet sample_latent(std::size_t n, std::size_t dim, Rng& rng) {
  require_n(n);
  if (dim < 1) throw ContractError("latent dim must be >= 1");
  SampleSet set{Tensor({n, dim}), Source::Latent, rng};
  for (double& v : set.points.data()) v = rng.normal();
  return set;
}

SampleSet sample_target(Source target, std::size_t n, Rng& rng) {
  require_n(n);
  SampleSet set{Tensor({n, 2}), target, rng};
  switch (target) {
    case Source::Swissroll: swissroll(set.points, rng); break;
    case Source::Circles: circles(set.points, rng); break;
    case Source::Rings: rings(set.points, rng); break;
    case Source::Moons: moons(set.points, rng); break;
    case Source::EightGaussians: eight_gaussians(set.points, rng); break;
    case Source::Pinwheel: pinwheel(set.points, rng); break;
    case Source::TwoSpirals: two_spirals(set.points, rng); break;
    case Source::Checkerboard: checkerboard(set.points, rng); break;
    default:
      throw ContractError("'" + std::string(source_name(target)) +
                          "' is not a synthetic target; valid targets: " + valid_target_names());
  }
  return set;
}

std::pair<SampleSet, SampleSet> analytic_pair_chi_gaussian(std::size_t n, Rng& rng) {
  require_n(n);
  SampleSet half{Tensor({n, 1}), Source::HalfNormal, rng};
  for (double& v : half.points.data()) v = std::fabs(rng.normal());
  SampleSet normal{Tensor({n, 1}), Source::Normal, rng};
  for (double& v : normal.points.data()) v = rng.normal();
  return {std::move(half), std::move(normal)};
}

std::array<std::array<double, 2>, 8> eight_gaussian_centers() {
  const double s = 1.0 / std::sqrt(2.0);
  const double raw[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {s, s}, {s, -s}, {-s, s}, {-s, -s}};
  std::array<std::array<double, 2>, 8> out{};
  for (std::size_t k = 0; k < 8; ++k) out[k] = {4.0 * raw[k][0] / 1.414, 4.0 * raw[k][1] / 1.414};
  return out;
}

}  // namespace ksgan::targets
