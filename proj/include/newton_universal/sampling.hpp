#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "newton_universal/linalg.hpp"

namespace nu {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; derives independent substream seeds from (seed, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) { return Rng(derive_seed(seed, stream)); }

// Uniform on the unit sphere (normalized Gaussian).
inline Vec random_direction(std::size_t n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Vec d(n);
    for (auto& x : d) x = gauss(rng);
    const double nd = norm(d);
    if (nd > 1e-300) return (1.0 / nd) * d;
  }
}

// Uniform in the closed ball B(center, radius): radius scaled by U^{1/n}.
inline Vec random_in_ball(const Vec& center, double radius, Rng& rng) {
  const std::size_t n = center.size();
  Vec d = random_direction(n, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double s = radius * std::pow(unif(rng), 1.0 / static_cast<double>(n));
  return center + s * d;
}

// Nearest point of B(center, radius); nonexpansive.
inline Vec project_to_ball(const Vec& x, const Vec& center, double radius) {
  Vec d = x - center;
  const double nd = norm(d);
  if (nd <= radius) return x;
  return center + (radius / nd) * d;
}

}  // namespace nu
