#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace randcache {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Mixes a master seed with stream coordinates (trial, block, role, ...).
/// Distinct coordinate tuples give statistically independent seeds.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = detail::splitmix64(master);
  for (std::uint64_t c : coords) h = detail::splitmix64(h ^ detail::splitmix64(c + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  return Rng{derive_seed(master, coords)};
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>{0.0, 1.0}(rng);
}

inline std::uint64_t poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::poisson_distribution<long long>{mean}(rng));
}

}  // namespace randcache
