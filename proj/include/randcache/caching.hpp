#pragma once

// Network parameters, popularity profiles, randomized caching strategies and
// the closed-form offloading loss.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace randcache {

/// Which exponent the miss probability uses.
///  - appendix:  exp{-lambda_s*pi*gamma^2 * [1 - (1 - pi_i)^M]}  (counts SBS neighbors; default)
///  - main_text: exp{-lambda_u*pi*gamma^2 * (1 - pi_i)^M}         (literal theorem statement)
enum class FormulaMode { appendix, main_text };

inline const char* to_string(FormulaMode m) noexcept {
  return m == FormulaMode::appendix ? "appendix" : "main_text";
}

struct NetworkConfig {
  double lambda_u = 0.1;   // users per unit area
  double lambda_s = 0.1;   // SBSs per unit area
  double lambda_b = 0.0;   // BSs per unit area; informational only
  double lambda_r = 1.0;   // requests per unit time per user
  double R = 10.0;         // BS coverage radius
  double gamma = 1.0;      // SBS communication radius
  double B = 1.0;          // file size, bits
  double R0 = 1.0;         // BS-to-user rate, bits per unit time
  std::size_t N = 10;      // catalog size
  std::size_t M = 1;       // cache slots per SBS
  FormulaMode formula_mode = FormulaMode::appendix;

  void validate() const {
    if (!(lambda_u >= 0.0) || !(lambda_s >= 0.0) || !(lambda_b >= 0.0) || !(lambda_r >= 0.0))
      throw ParameterError("densities and request rate must be nonnegative");
    if (!(R > 0.0) || !(gamma > 0.0) || !(B > 0.0) || !(R0 > 0.0))
      throw ParameterError("R, gamma, B and R0 must be positive");
    if (N < 1) throw ParameterError("N must be at least 1");
    if (M < 1) throw ParameterError("M must be at least 1");
  }

  /// B / R0: backhaul delay of one missed request.
  double miss_delay() const noexcept { return B / R0; }
  /// Mean number of SBSs within gamma of a user.
  double sbs_neighbor_mean() const noexcept { return lambda_s * std::numbers::pi * gamma * gamma; }
  /// lambda_u * pi * gamma^2, the exponent scale of the theorem-stated g.
  double user_disk_mass() const noexcept { return lambda_u * std::numbers::pi * gamma * gamma; }
  double coverage_area() const noexcept { return std::numbers::pi * R * R; }
};

inline constexpr double kSimplexTolerance = 1e-12;
inline constexpr double kRenormalizeTolerance = 1e-9;

namespace detail {

// Validates a probability vector; renormalizes when the sum is off by at most
// kRenormalizeTolerance, rejects otherwise.
inline std::vector<double> checked_simplex(std::vector<double> v, const char* what) {
  if (v.empty()) throw ParameterError(std::string(what) + ": empty probability vector");
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0)
      throw ParameterError(std::string(what) + ": entries must be finite and nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kRenormalizeTolerance)
    throw ParameterError(std::string(what) + ": entries must sum to 1");
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    for (double& x : v) x /= sum;
  for (double& x : v) x = std::min(x, 1.0);
  return v;
}

}  // namespace detail

/// Point on the probability simplex. `Tag` keeps profiles and strategies apart.
template <typename Tag>
class SimplexPoint {
 public:
  SimplexPoint() = default;
  explicit SimplexPoint(std::vector<double> values)
      : values_(detail::checked_simplex(std::move(values), Tag::name)) {}

  std::size_t size() const noexcept { return values_.size(); }
  /// 0-based access; file i (1-based) lives at index i-1.
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> values_;
};

struct PopularityTag {
  static constexpr const char* name = "popularity profile";
};
struct StrategyTag {
  static constexpr const char* name = "caching strategy";
};

/// Request popularity P over the catalog.
using PopularityProfile = SimplexPoint<PopularityTag>;
/// Caching distribution Pi from which each SBS draws its M slots.
using CachingStrategy = SimplexPoint<StrategyTag>;

/// File indices (1-based, with replacement) held by one SBS.
struct CacheContents {
  std::vector<std::size_t> entries;

  bool holds(std::size_t file) const noexcept {
    return std::find(entries.begin(), entries.end(), file) != entries.end();
  }
};

/// Draws 1-based file indices from a distribution on [1, N].
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> weights)
      : dist_(weights.begin(), weights.end()) {}

  std::size_t operator()(Rng& rng) { return dist_(rng) + 1; }

 private:
  std::discrete_distribution<std::size_t> dist_;
};

inline PopularityProfile zipf_profile(std::size_t N, double s) {
  if (N == 0) throw ParameterError("zipf_profile: N must be at least 1");
  if (!(s >= 0.0)) throw ParameterError("zipf_profile: exponent must be nonnegative");
  std::vector<double> w(N);
  for (std::size_t i = 0; i < N; ++i) w[i] = std::pow(static_cast<double>(i + 1), -s);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return PopularityProfile{std::move(w)};
}

inline CachingStrategy uniform_strategy(std::size_t N) {
  if (N == 0) throw ParameterError("uniform_strategy: N must be at least 1");
  return CachingStrategy{std::vector<double>(N, 1.0 / static_cast<double>(N))};
}

/// Caching in proportion to popularity (Pi = P).
inline CachingStrategy proportional_strategy(const PopularityProfile& p) {
  return CachingStrategy{p.vector()};
}

inline CacheContents sample_cache(CategoricalSampler& sampler, std::size_t M, Rng& rng) {
  CacheContents c;
  c.entries.reserve(M);
  for (std::size_t k = 0; k < M; ++k) c.entries.push_back(sampler(rng));
  return c;
}

inline CacheContents sample_cache(const CachingStrategy& strategy, std::size_t M, Rng& rng) {
  CategoricalSampler sampler(strategy.values());
  return sample_cache(sampler, M, rng);
}

/// 1 - (1 - pi)^M, computed without cancellation for small pi.
inline double hit_fraction(double pi_i, std::size_t M) {
  return -std::expm1(static_cast<double>(M) * std::log1p(-pi_i));
}

/// Probability that no SBS within gamma of the typical user holds a file
/// cached with probability pi_i.
inline double miss_probability(double pi_i, const NetworkConfig& config) {
  if (!(pi_i >= 0.0 && pi_i <= 1.0)) throw ParameterError("miss_probability: pi_i outside [0,1]");
  if (config.formula_mode == FormulaMode::main_text) {
    const double untouched = std::exp(static_cast<double>(config.M) * std::log1p(-pi_i));
    return std::exp(-config.user_disk_mass() * untouched);
  }
  return std::exp(-config.sbs_neighbor_mean() * hit_fraction(pi_i, config.M));
}

/// Average offloading loss (B/R0) * sum_i p_i * miss_probability(pi_i).
inline double offloading_loss(const CachingStrategy& strategy, const PopularityProfile& profile,
                              const NetworkConfig& config) {
  if (strategy.size() != profile.size())
    throw ParameterError("offloading_loss: strategy and profile lengths differ");
  // Dividing by the stored mass keeps the all-miss case exactly B/R0.
  double acc = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    acc += profile[i] * miss_probability(strategy[i], config);
    mass += profile[i];
  }
  return config.miss_delay() * (acc / mass);
}

}  // namespace randcache
