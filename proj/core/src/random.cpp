#include "bem/random.hpp"

#include <cmath>
#include <numbers>

#include "bem/error.hpp"

namespace bem {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  for (auto& s : state_) s = splitmix64(seed);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

__extension__ using u128 = unsigned __int128;

int Rng::uniform_int(int lo, int hi) noexcept {
  const auto range = static_cast<u128>(static_cast<std::int64_t>(hi) - lo + 1);
  const auto scaled = (static_cast<u128>(next_u64()) * range) >> 64;
  return lo + static_cast<int>(scaled);
}

double Rng::normal(double mean, double sigma) noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sigma * z;
}

int Rng::poisson(double mean) {
  require(mean >= 0.0 && mean <= 500.0, ErrorKind::invalid_argument,
          "poisson mean must lie in [0, 500]");
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  int k = 0;
  while (u > cdf && k < 100000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && static_cast<double>(k) > mean) break;
  }
  return k;
}

double Rng::gamma(double shape) {
  require(shape > 0.0 && std::isfinite(shape), ErrorKind::invalid_argument,
          "gamma shape must be positive");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    const double u = 1.0 - uniform();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = 1.0 - uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

}  // namespace bem
