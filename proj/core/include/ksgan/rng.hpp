#pragma once

#include <array>
#include <cstdint>

namespace ksgan {

/// xoshiro256** seeded through splitmix64. Identical state gives an identical
/// stream on every platform; normals use Box-Muller so they do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  /// Independent stream: this generator advanced by (k + 1) jumps of 2^128
  /// steps. Streams for distinct k never overlap.
  Rng substream(std::uint64_t k) const;

  const std::array<std::uint64_t, 4>& state() const { return s_; }
  friend bool operator==(const Rng& a, const Rng& b) {
    return a.s_ == b.s_ && a.has_spare_ == b.has_spare_ && a.spare_ == b.spare_;
  }

 private:
  void jump();

  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ksgan
