#pragma once

#include <array>
#include <cstdint>

namespace bem {

/// xoshiro256** 1.0 seeded through SplitMix64 (Blackman & Vigna). Stream
/// version "bem-rng-1": every variate below consumes raw 64-bit outputs in a
/// fixed order, so a seed reproduces the same numbers on any platform with
/// IEEE-754 doubles.
class Rng {
 public:
  static constexpr const char* kVersion = "bem-rng-1/xoshiro256**";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() noexcept;

  /// (next_u64 >> 11) * 2^-53, in [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Integer in [lo, hi] by multiply-shift on one 64-bit draw.
  int uniform_int(int lo, int hi) noexcept;
  /// Box-Muller, cosine branch only: two uniforms per call.
  double normal(double mean = 0.0, double sigma = 1.0) noexcept;
  /// Inversion by sequential search: one uniform per call. Mean <= 500.
  int poisson(double mean);
  /// Marsaglia-Tsang; shapes below 1 use the Gamma(a+1) * U^(1/a) boost.
  double gamma(double shape);
  /// X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b), drawn in that order.
  double beta(double a, double b);

 private:
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace bem
