#pragma once

// Closed-form waiting-time bounds for learning the popularity profile, with
// and without source-domain (transfer learning) samples.
//
// Every bound uses the theorem-stated g(pi_i) = exp{-lambda_u*pi*gamma^2*(1 - pi_i)^M},
// independent of NetworkConfig::formula_mode.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>

#include "caching.hpp"
#include "error.hpp"

namespace randcache {

/// How sup over Pi of sum_i g(pi_i) is evaluated.
///  - conservative_N: the upper bound N (each g <= 1)
///  - numeric: maximized over the simplex
enum class SupMode { conservative_N, numeric };

inline const char* to_string(SupMode m) noexcept {
  return m == SupMode::conservative_N ? "conservative_N" : "numeric";
}

struct BoundInputs {
  NetworkConfig config;
  double epsilon = 0.5;  // accuracy target, time units
  double delta = 0.1;    // failure probability
  SupMode sup_mode = SupMode::conservative_N;

  void validate() const {
    config.validate();
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
    if (!(config.lambda_r > 0.0)) throw ParameterError("waiting-time bounds need lambda_r > 0");
  }

  /// log(2N / delta)
  double log_term() const { return std::log(2.0 * static_cast<double>(config.N) / delta); }
};

/// Result of a waiting-time bound. `value` is +inf when the user density does
/// not exceed `threshold`.
struct WaitingTimeBound {
  bool finite = false;
  double value = std::numeric_limits<double>::infinity();
  double threshold = 0.0;           // L (target only) or rho (with source samples)
  double epsilon_bar = 0.0;
  double epsilon_pq = 0.0;          // equals epsilon_bar for the target-only bound
  double g_star = 0.0;              // 1 - exp{-2 * epsilon_pq^2}
  double inner_log_argument = 0.0;  // 1 - L/lambda_u  or  1 - Lambda
  double Lambda = 0.0;
};

/// g(pi_i) as stated in the waiting-time theorems.
inline double theorem_g(double pi_i, const NetworkConfig& config) {
  return std::exp(-config.user_disk_mass() *
                  std::exp(static_cast<double>(config.M) * std::log1p(-pi_i)));
}

namespace detail {

template <typename F>
double golden_max(F&& f, double lo, double hi, int iterations = 100) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iterations && b - a > 1e-15; ++it) {
    if (fc >= fd) {
      b = d; d = c; fd = fc;
      c = b - ratio * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + ratio * (b - a); fd = f(d);
    }
  }
  return std::max({fc, fd, f(lo), f(hi)});
}

// Maximum of sum_i g(pi_i) over the simplex. The summands share one scalar
// function, so a maximizer has k coordinates at a common value (concave part
// of g), at most one free coordinate b (convex part), and zeros elsewhere.
inline double numeric_sup_g_sum(const NetworkConfig& config) {
  const std::size_t N = config.N;
  const double g0 = theorem_g(0.0, config);
  double best = theorem_g(1.0, config) + static_cast<double>(N - 1) * g0;  // vertex
  constexpr int kGrid = 1024;
  for (std::size_t k = 1; k < N; ++k) {
    const double kd = static_cast<double>(k);
    const double zeros = static_cast<double>(N - k - 1);
    auto total = [&](double b) {
      return kd * theorem_g((1.0 - b) / kd, config) + theorem_g(b, config) + zeros * g0;
    };
    int arg = 0;
    double top = -1.0;
    for (int j = 0; j <= kGrid; ++j) {
      const double v = total(static_cast<double>(j) / kGrid);
      if (v > top) { top = v; arg = j; }
    }
    const double lo = std::max(0, arg - 1) / static_cast<double>(kGrid);
    const double hi = std::min(kGrid, arg + 1) / static_cast<double>(kGrid);
    best = std::max({best, top, golden_max(total, lo, hi)});
  }
  return std::min(best, static_cast<double>(N));
}

}  // namespace detail

inline double sup_g_sum(const NetworkConfig& config, SupMode mode) {
  config.validate();
  if (mode == SupMode::conservative_N) return static_cast<double>(config.N);
  return detail::numeric_sup_g_sum(config);
}

/// R0 * epsilon / (2 B sup_Pi sum_i g(pi_i)).
inline double epsilon_bar(const BoundInputs& in) {
  return in.config.R0 * in.epsilon / (2.0 * in.config.B * sup_g_sum(in.config, in.sup_mode));
}

/// Waiting time after which the target-only estimate yields a strategy within
/// epsilon of optimal with probability at least 1 - delta.
inline WaitingTimeBound waiting_time_target(const BoundInputs& in) {
  in.validate();
  const NetworkConfig& c = in.config;
  WaitingTimeBound out;
  out.epsilon_bar = epsilon_bar(in);
  out.epsilon_pq = out.epsilon_bar;
  out.g_star = -std::expm1(-2.0 * out.epsilon_bar * out.epsilon_bar);
  const double log_term = in.log_term();
  out.threshold = log_term / c.coverage_area();
  out.Lambda = log_term / (c.lambda_u * c.coverage_area());
  out.inner_log_argument = 1.0 - out.Lambda;
  if (!(c.lambda_u > out.threshold)) return out;
  out.finite = true;
  out.value = std::max(0.0, -std::log1p(-out.Lambda) / (c.lambda_r * out.g_star));
  return out;
}

/// Simplified bound 2 B^2 N^2 log(2N/delta) / (pi R^2 lambda_u lambda_r R0^2 epsilon^2);
/// per_user multiplies by lambda_r^2 (epsilon replaced by epsilon / lambda_r).
inline double waiting_time_simplified(const BoundInputs& in, bool per_user) {
  in.validate();
  const NetworkConfig& c = in.config;
  const double n = static_cast<double>(c.N);
  const double value = 2.0 * c.B * c.B * n * n * in.log_term() /
                       (c.coverage_area() * c.lambda_u * c.lambda_r * c.R0 * c.R0 *
                        in.epsilon * in.epsilon);
  return per_user ? value * c.lambda_r * c.lambda_r : value;
}

/// Waiting time for the pooled estimate with m source samples whose
/// distribution lies at sup-distance `distance` from the popularity profile.
inline WaitingTimeBound waiting_time_tl(const BoundInputs& in, std::uint64_t m, double distance) {
  in.validate();
  if (!(distance >= 0.0 && distance <= 1.0))
    throw ParameterError("waiting_time_tl: distance must lie in [0, 1]");
  const NetworkConfig& c = in.config;
  WaitingTimeBound out;
  out.epsilon_bar = epsilon_bar(in);
  if (!(out.epsilon_bar > distance))
    throw InfeasibleError("waiting_time_tl: epsilon at or below the accuracy floor");
  out.epsilon_pq = out.epsilon_bar - distance;
  out.g_star = -std::expm1(-2.0 * out.epsilon_pq * out.epsilon_pq);
  const double offset_log = in.log_term() - 2.0 * out.epsilon_pq * out.epsilon_pq * static_cast<double>(m);
  out.threshold = offset_log / c.coverage_area();
  out.Lambda = offset_log / (c.lambda_u * c.coverage_area());
  out.inner_log_argument = 1.0 - out.Lambda;
  if (!(c.lambda_u > out.threshold)) return out;
  out.finite = true;
  out.value = std::max(0.0, -std::log1p(-out.Lambda) / (c.lambda_r * out.g_star));
  return out;
}

struct SourceSampleRequirement {
  std::uint64_t m_min = 0;
  bool distance_ok = false;
  double F = 0.0;
  double epsilon_pq = 0.0;
  double distance_threshold = 0.0;  // epsilon R0 / (2 B lambda_u pi gamma^2 N)
};

/// Number of source samples past which the pooled estimator's waiting time is
/// no worse than the target-only one, and the distance condition under which
/// that comparison holds.
inline SourceSampleRequirement tl_min_source_samples(const BoundInputs& in, double distance) {
  in.validate();
  const double eb = epsilon_bar(in);
  if (!(distance >= 0.0) || !(distance < eb))
    throw InfeasibleError("tl_min_source_samples: distance must lie in [0, epsilon_bar)");
  const NetworkConfig& c = in.config;
  SourceSampleRequirement out;
  out.epsilon_pq = eb - distance;
  const double two_eps_pq2 = 2.0 * out.epsilon_pq * out.epsilon_pq;
  const double ratio = std::expm1(-2.0 * eb * eb) / std::expm1(-two_eps_pq2);
  const double users = c.lambda_u * c.coverage_area();
  const double log_term = in.log_term();
  // users * (1 - e^ratio * (1 - log_term/users)), expanded so users == 0 is defined
  out.F = users * (1.0 - std::exp(ratio)) + std::exp(ratio) * log_term;
  out.m_min = static_cast<std::uint64_t>(std::ceil(std::max(0.0, log_term - out.F) / two_eps_pq2));
  out.distance_threshold =
      in.epsilon * c.R0 / (2.0 * c.B * c.user_disk_mass() * static_cast<double>(c.N));
  out.distance_ok = distance < out.distance_threshold;
  return out;
}

}  // namespace randcache
