#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace semloc {

// Deterministic helpers built on raw mt19937_64 output. The standard library
// distributions are implementation defined, so everything that must reproduce
// bit for bit across toolchains goes through these.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One generator per purpose: mixing the stream tag keeps draws for unrelated
// stages independent of each other's draw counts.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(seed ^ (stream * 0x9e3779b97f4a7c15ULL)));
}

// Unbiased integer in [0, n) via rejection.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % n);
}

// Uniform in [0, 1) with 53-bit resolution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller without the cached second value so the draw count per call is
// fixed.
inline double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename T>
void shuffle_in_place(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

// k distinct indices from [0, n) \ {exclude}, in draw order.
std::vector<std::size_t> sample_distinct(std::mt19937_64& rng, std::size_t n,
                                         std::size_t k, std::size_t exclude);

}  // namespace semloc
