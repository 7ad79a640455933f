#pragma once

#include <cmath>
#include <cstdint>

#include "entsim/errors.hpp"

namespace entsim {

/// Counter-based pseudo-random generator (splitmix64 core).
///
/// Each (seed, stream) pair yields an independent deterministic sequence,
/// so per-record streams can be generated in any order with identical
/// results. Output is platform-independent.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(mix(seed + kGamma) ^ mix(stream * kGamma + kGamma))) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform double in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (two uniforms per call, no caching).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Poisson draw. Product-of-uniforms inversion for small means (split
  /// additively into chunks so exp() never underflows); normal
  /// approximation with rejection of negatives above 1e3.
  long long poisson(double mean) {
    if (mean < 0.0) throw DomainError("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean <= 1000.0) {
      long long total = 0;
      double remaining = mean;
      while (remaining > 0.0) {
        const double chunk = remaining > 60.0 ? 60.0 : remaining;
        total += poisson_knuth(chunk);
        remaining -= chunk;
        if (remaining <= 0.0) break;
      }
      return total;
    }
    const double sd = std::sqrt(mean);
    for (;;) {
      const double x = std::round(mean + sd * normal());
      if (x >= 0.0) return static_cast<long long>(x);
    }
  }

private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  long long poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    long long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t state_;
};

}  // namespace entsim
