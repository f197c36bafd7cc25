#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include "qhs/types.hpp"

namespace qhs {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent substream key from a base seed and a path of
/// integer tags. Identical (seed, tags) always give the same key, so work
/// keyed this way can be evaluated in any order.
inline std::uint64_t substream_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> tags) {
  std::uint64_t key = mix64(seed);
  for (std::uint64_t t : tags) key = mix64(key ^ mix64(t + 0x632be59bd9b4e019ULL));
  return key;
}

/// Small counter-based generator. Output is fully specified here (no
/// implementation-defined std distributions), so streams are reproducible
/// across standard libraries.
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept : state_(key) {}
  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
      : state_(substream_key(seed, tags)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform point in the Euclidean ball of the given radius centred at 0.
  Vector in_ball(Eigen::Index dim, double radius) {
    Vector g(dim);
    double norm2 = 0.0;
    do {
      for (Eigen::Index k = 0; k < dim; ++k) g[k] = normal();
      norm2 = g.squaredNorm();
    } while (norm2 == 0.0);
    const double r =
        radius * std::pow(uniform(), 1.0 / static_cast<double>(dim));
    return g * (r / std::sqrt(norm2));
  }

 private:
  std::uint64_t state_;
};

}  // namespace qhs
