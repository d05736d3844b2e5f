#pragma once

// Minimization of the offloading loss over caching strategies on the simplex:
// multi-start projected gradient descent, plus two independent oracles
// (closed-form KKT solution for M = 1, exhaustive lattice search for small N).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "caching.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace randcache {

enum class StepRule { fixed, backtracking };

inline const char* to_string(StepRule r) noexcept {
  return r == StepRule::fixed ? "fixed" : "backtracking";
}

struct SolverOptions {
  std::size_t restarts = 16;
  std::size_t max_iterations = 100'000;
  StepRule step_rule = StepRule::backtracking;
  double tolerance = 1e-10;       // absolute objective change
  double grid_resolution = 0.01;  // lattice step for brute_force_optimum
  double fixed_step = 0.05;       // used only with StepRule::fixed
  std::uint64_t seed = 1;
  std::size_t workers = 1;        // restarts run in parallel when > 1

  void validate() const {
    if (restarts < 1) throw ParameterError("solver: restarts must be at least 1");
    if (max_iterations < 1) throw ParameterError("solver: max_iterations must be at least 1");
    if (!(tolerance > 0.0)) throw ParameterError("solver: tolerance must be positive");
    if (!(grid_resolution > 0.0 && grid_resolution <= 1.0))
      throw ParameterError("solver: grid_resolution must lie in (0, 1]");
    if (!(fixed_step > 0.0)) throw ParameterError("solver: fixed_step must be positive");
  }
};

namespace detail {

inline double loss_of(std::span<const double> pi, std::span<const double> p, const NetworkConfig& c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * miss_probability(std::clamp(pi[i], 0.0, 1.0), c);
  return c.miss_delay() * acc;
}

inline std::vector<double> gradient_of(std::span<const double> pi, std::span<const double> p,
                                       const NetworkConfig& c) {
  std::vector<double> g(p.size());
  const double m = static_cast<double>(c.M);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = std::clamp(pi[i], 0.0, 1.0);
    const double slope = m * std::pow(1.0 - x, m - 1.0);  // d/dpi of 1 - (1-pi)^M
    if (c.formula_mode == FormulaMode::main_text)
      g[i] = c.miss_delay() * p[i] * c.user_disk_mass() * slope * miss_probability(x, c);
    else
      g[i] = -c.miss_delay() * p[i] * c.sbs_neighbor_mean() * slope * miss_probability(x, c);
  }
  return g;
}

// Euclidean projection onto {x : x >= 0, sum x = 1} (sort-based).
inline std::vector<double> project(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - theta, 0.0);
  return w;
}

}  // namespace detail

/// Analytic gradient of offloading_loss with respect to the strategy.
inline std::vector<double> loss_gradient(const CachingStrategy& strategy,
                                         const PopularityProfile& profile,
                                         const NetworkConfig& config) {
  if (strategy.size() != profile.size())
    throw ParameterError("loss_gradient: strategy and profile lengths differ");
  return detail::gradient_of(strategy.values(), profile.values(), config);
}

inline CachingStrategy project_simplex(std::span<const double> v) {
  if (v.empty()) throw ParameterError("project_simplex: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw ParameterError("project_simplex: non-finite entry");
  return CachingStrategy{detail::project(v)};
}

struct OptimizationResult {
  CachingStrategy strategy;
  double objective = 0.0;
  bool converged = false;
  std::size_t iterations = 0;        // of the winning restart
  std::size_t winning_restart = 0;
  std::vector<double> restart_objectives;
  std::vector<double> trace;         // objective per accepted iterate, winning restart
};

namespace detail {

struct DescentRun {
  std::vector<double> x;
  double objective = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

inline void descend(DescentRun& run, std::span<const double> p, const NetworkConfig& c,
                    const SolverOptions& opts, std::size_t& budget) {
  constexpr double kArmijo = 1e-4;
  double step = 1.0;
  std::vector<double> best_x = run.x;
  double best_f = run.objective;
  run.converged = false;
  while (budget > 0) {
    --budget;
    ++run.iterations;
    const std::vector<double> g = gradient_of(run.x, p, c);
    std::vector<double> trial(run.x.size());
    std::vector<double> y;
    double fy = 0.0;
    bool accepted = false;
    if (opts.step_rule == StepRule::fixed) {
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = run.x[i] - opts.fixed_step * g[i];
      y = project(trial);
      fy = loss_of(y, p, c);
      accepted = true;
    } else {
      step = std::min(step * 2.0, 1e12);
      while (step > 1e-30) {
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = run.x[i] - step * g[i];
        y = project(trial);
        fy = loss_of(y, p, c);
        double decrease = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) decrease += g[i] * (y[i] - run.x[i]);
        if (fy <= run.objective + kArmijo * decrease) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
    }
    if (!accepted) {
      run.converged = true;  // no descent direction left at machine precision
      break;
    }
    double moved = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) moved = std::max(moved, std::abs(y[i] - run.x[i]));
    const double change = std::abs(run.objective - fy);
    run.x = std::move(y);
    run.objective = fy;
    run.trace.push_back(fy);
    if (fy < best_f) {
      best_f = fy;
      best_x = run.x;
    }
    if (change < opts.tolerance || moved < 1e-15) {
      run.converged = true;
      break;
    }
  }
  run.x = std::move(best_x);
  run.objective = best_f;
}

// Reorders the coordinates of x so that more popular files get larger caching
// probabilities; ties in p keep their current order.
inline std::vector<double> align_with_popularity(std::span<const double> x, std::span<const double> p) {
  std::vector<std::size_t> by_p(p.size());
  std::iota(by_p.begin(), by_p.end(), 0);
  std::stable_sort(by_p.begin(), by_p.end(), [&](std::size_t a, std::size_t b) {
    if (p[a] != p[b]) return p[a] > p[b];
    return x[a] > x[b];
  });
  std::vector<double> values(x.begin(), x.end());
  std::sort(values.begin(), values.end(), std::greater<>());
  std::vector<double> aligned(x.size());
  for (std::size_t k = 0; k < by_p.size(); ++k) aligned[by_p[k]] = values[k];
  return aligned;
}

inline DescentRun run_restart(std::vector<double> start, std::span<const double> p,
                              const NetworkConfig& c, const SolverOptions& opts) {
  DescentRun run;
  run.x = project(start);
  run.objective = loss_of(run.x, p, c);
  run.trace.push_back(run.objective);
  std::size_t budget = opts.max_iterations;
  for (int round = 0; round < 4; ++round) {
    descend(run, p, c, opts, budget);
    std::vector<double> aligned = align_with_popularity(run.x, p);
    if (aligned == run.x) break;
    const double fa = loss_of(aligned, p, c);
    // Exchange argument: with a miss probability decreasing in pi, alignment never hurts.
    if (c.formula_mode == FormulaMode::main_text && fa > run.objective) break;
    run.x = std::move(aligned);
    run.objective = fa;
    run.trace.push_back(fa);
    if (budget == 0) break;
  }
  return run;
}

inline std::vector<double> dirichlet_point(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> x(n);
  double total = 0.0;
  for (double& v : x) total += (v = expo(rng));
  for (double& v : x) v /= total;
  return x;
}

}  // namespace detail

/// Multi-start projected gradient descent. Restart 0 starts at the uniform
/// strategy, the others at Dirichlet(1) points drawn from (seed, restart).
/// The winner is the lowest objective, ties broken by restart index.
inline OptimizationResult optimize_strategy(const PopularityProfile& profile,
                                            const NetworkConfig& config,
                                            const SolverOptions& opts = {}) {
  opts.validate();
  config.validate();
  const std::size_t n = profile.size();
  std::vector<detail::DescentRun> runs(opts.restarts);
  parallel_for(opts.restarts, opts.workers, [&](std::size_t r) {
    std::vector<double> start;
    if (r == 0) {
      start.assign(n, 1.0 / static_cast<double>(n));
    } else {
      Rng rng = make_stream(opts.seed, {0x4f5054ULL, r});
      start = detail::dirichlet_point(n, rng);
    }
    runs[r] = detail::run_restart(std::move(start), profile.values(), config, opts);
  });

  OptimizationResult result;
  std::size_t win = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    result.restart_objectives.push_back(runs[r].objective);
    if (runs[r].objective < runs[win].objective) win = r;
  }
  result.winning_restart = win;
  result.strategy = CachingStrategy{runs[win].x};
  result.objective = offloading_loss(result.strategy, profile, config);
  result.converged = runs[win].converged;
  result.iterations = runs[win].iterations;
  result.trace = std::move(runs[win].trace);
  return result;
}

/// Exact minimizer of sum_i p_i exp{-c pi_i} over the simplex (the M = 1 loss
/// up to the factor B/R0). Stationarity gives pi_i = ln(c p_i / mu) / c on the
/// active set; the active set is the largest popularity prefix with c p_i > mu.
inline CachingStrategy waterfilling_M1(const PopularityProfile& profile, double c) {
  if (!(c > 0.0)) throw ParameterError("waterfilling_M1: c must be positive");
  const std::size_t n = profile.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return profile[a] > profile[b]; });
  double log_sum = 0.0, log_mu = 0.0;
  std::size_t active = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pk = profile[order[k]];
    if (!(pk > 0.0)) break;
    const double candidate = (log_sum + std::log(c * pk) - c) / static_cast<double>(k + 1);
    if (!(std::log(c * pk) > candidate)) break;
    log_sum += std::log(c * pk);
    log_mu = candidate;
    active = k + 1;
  }
  std::vector<double> pi(n, 0.0);
  for (std::size_t k = 0; k < active; ++k)
    pi[order[k]] = (std::log(c * profile[order[k]]) - log_mu) / c;
  return project_simplex(pi);
}

inline CachingStrategy waterfilling_M1(const PopularityProfile& profile, const NetworkConfig& config) {
  if (config.M != 1) throw UnsupportedError("waterfilling_M1: requires M = 1");
  if (config.formula_mode != FormulaMode::appendix)
    throw UnsupportedError("waterfilling_M1: requires the appendix loss form");
  return waterfilling_M1(profile, config.sbs_neighbor_mean());
}

struct BruteForceResult {
  CachingStrategy strategy;
  double objective = 0.0;
};

inline constexpr std::size_t kBruteForceMaxFiles = 4;

/// Best point of the simplex lattice {k * step} by exhaustive search.
inline BruteForceResult brute_force_optimum(const PopularityProfile& profile,
                                            const NetworkConfig& config, double grid_resolution) {
  const std::size_t n = profile.size();
  if (n > kBruteForceMaxFiles) throw UnsupportedError("brute_force_optimum: refused for N > 4");
  if (!(grid_resolution > 0.0 && grid_resolution <= 1.0))
    throw ParameterError("brute_force_optimum: grid_resolution must lie in (0, 1]");
  const long units = std::max(1L, std::lround(1.0 / grid_resolution));
  std::vector<long> parts(n, 0);
  std::vector<double> x(n), best_x;
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, long)> visit = [&](std::size_t i, long left) {
    if (i + 1 == n) {
      parts[i] = left;
      for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<double>(parts[k]) / units;
      const double f = detail::loss_of(x, profile.values(), config);
      if (f < best) {
        best = f;
        best_x = x;
      }
      return;
    }
    for (long k = left; k >= 0; --k) {
      parts[i] = k;
      visit(i + 1, left - k);
    }
  };
  visit(0, units);
  BruteForceResult out{CachingStrategy{best_x}, 0.0};
  out.objective = offloading_loss(out.strategy, profile, config);
  return out;
}

}  // namespace randcache
