#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace ppnp {

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the stream for (seed, key) depends only on those
/// two values, so per-pixel streams are reproducible in any evaluation order.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t key)
      : base_(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ mix64(key * 0xd1b54a32d192ed03ULL + 1)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

/// Poisson draw: sequential inversion for small means, Hormann's transformed
/// rejection (PTRS) otherwise.
template <typename Rng>
std::int64_t sample_poisson(double lambda, Rng& rng) {
  if (!(lambda > 0.0)) return 0;
  if (lambda < 10.0) {
    double p = std::exp(-lambda);
    double cdf = p;
    const double u = rng.uniform();
    std::int64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= lambda / double(k);
      cdf += p;
      if (p <= 0.0 && cdf < u) break;  // numerical tail
    }
    return k;
  }
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::int64_t>(k);
  }
}

}  // namespace ppnp
