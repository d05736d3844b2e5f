#include "randcache/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"

using namespace randcache;

namespace {

NetworkConfig with_neighbor_mean(double c, std::size_t N, std::size_t M) {
  NetworkConfig cfg;
  cfg.gamma = 1.0;
  cfg.lambda_s = c / std::numbers::pi;
  cfg.N = N;
  cfg.M = M;
  return cfg;
}

std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double t = 0.0;
  for (auto& x : v) t += (x = e(rng));
  for (auto& x : v) x /= t;
  return v;
}

// Minimizer of sum p_i exp(-c pi_i) for N = 2 by bisection on the stationarity
// condition p1 c e^{-c x} = p2 c e^{-c (1-x)} (or a boundary).
double two_file_optimum(double p1, double p2, double c) {
  auto d = [&](double x) { return -p1 * c * std::exp(-c * x) + p2 * c * std::exp(-c * (1 - x)); };
  if (d(1.0) <= 0.0) return 1.0;
  if (d(0.0) >= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (d(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(LossGradient, MatchesCentralDifferences) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t N = 2 + k % 6;
    auto cfg = with_neighbor_mean(0.2 + 4.0 * u(rng), N, 1 + k % 4);
    cfg.B = 0.5 + u(rng);
    const PopularityProfile p(random_simplex(N, rng));
    auto x = random_simplex(N, rng);
    for (auto& v : x) v = 0.02 + 0.96 * v;  // keep central differences inside [0, 1]
    auto f = [&](const std::vector<double>& y) {
      double acc = 0.0;
      for (std::size_t i = 0; i < N; ++i)
        acc += p[i] * std::exp(-cfg.sbs_neighbor_mean() * (1.0 - std::pow(1.0 - y[i], static_cast<double>(cfg.M))));
      return cfg.miss_delay() * acc;
    };
    const auto fd = oracle::central_difference(f, x, 1e-6);
    const auto g = detail::gradient_of(x, p.values(), cfg);
    for (std::size_t i = 0; i < N; ++i)
      EXPECT_NEAR(g[i], fd[i], 1e-5 * std::max(1.0, std::abs(fd[i]))) << "k=" << k << " i=" << i;
  }
}

TEST(LossGradient, MainTextFormMatchesCentralDifferences) {
  Rng rng(4);
  NetworkConfig cfg;
  cfg.formula_mode = FormulaMode::main_text;
  cfg.lambda_u = 0.4;
  cfg.M = 3;
  cfg.N = 4;
  const PopularityProfile p(random_simplex(4, rng));
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const double a = cfg.user_disk_mass();
  auto f = [&](const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) acc += p[i] * std::exp(-a * std::pow(1.0 - y[i], 3.0));
    return acc;
  };
  const auto fd = oracle::central_difference(f, x, 1e-6);
  const auto g = detail::gradient_of(x, p.values(), cfg);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g[i], fd[i], 1e-8);
}

TEST(LossGradient, ZeroPopularityHasZeroComponent) {
  const auto g = loss_gradient(CachingStrategy({0.3, 0.7}), PopularityProfile({1.0, 0.0}), with_neighbor_mean(2.0, 2, 2));
  EXPECT_EQ(g[1], 0.0);
  EXPECT_LT(g[0], 0.0);
}

TEST(LossGradient, SingleSlotClosedForm) {
  const double c = 1.7;
  const auto cfg = with_neighbor_mean(c, 3, 1);
  const PopularityProfile p({0.5, 0.3, 0.2});
  const CachingStrategy s({0.2, 0.5, 0.3});
  const auto g = loss_gradient(s, p, cfg);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g[i], -p[i] * c * std::exp(-c * s[i]), 1e-14);
}

TEST(ProjectSimplex, Examples) {
  const std::vector<double> on{0.2, 0.3, 0.5};
  const auto same = project_simplex(on);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(same[i], on[i], 1e-15);
  EXPECT_EQ(project_simplex(std::vector<double>{2.0, 0.0}).vector(), (std::vector<double>{1.0, 0.0}));
  const auto half = project_simplex(std::vector<double>{0.6, 0.6});
  EXPECT_NEAR(half[0], 0.5, 1e-15);
  EXPECT_NEAR(half[1], 0.5, 1e-15);
}

TEST(ProjectSimplex, IsClosestPointAmongRandomCandidates) {
  Rng rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> v(4);
    for (auto& x : v) x = n(rng);
    const auto w = project_simplex(v);
    double dw = 0.0;
    for (std::size_t i = 0; i < 4; ++i) dw += (w[i] - v[i]) * (w[i] - v[i]);
    for (int j = 0; j < 50; ++j) {
      const auto y = random_simplex(4, rng);
      double dy = 0.0;
      for (std::size_t i = 0; i < 4; ++i) dy += (y[i] - v[i]) * (y[i] - v[i]);
      EXPECT_LE(dw, dy + 1e-12);
    }
  }
}

TEST(ProjectSimplex, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(project_simplex(std::vector<double>{}), ParameterError);
  EXPECT_THROW(project_simplex(std::vector<double>{INFINITY, 0.0}), ParameterError);
}

TEST(Waterfilling, UniformProfileGivesUniformStrategy) {
  const auto s = waterfilling_M1(zipf_profile(5, 0.0), 2.5);
  for (double x : s.values()) EXPECT_NEAR(x, 0.2, 1e-14);
}

TEST(Waterfilling, InteriorTwoFileHandValue) {
  const auto s = waterfilling_M1(PopularityProfile({0.8, 0.2}), 4.0);
  EXPECT_NEAR(s[0], 0.6732867951399863, 1e-12);
  EXPECT_NEAR(s[1], 0.32671320486001365, 1e-12);
  EXPECT_NEAR(s[0], two_file_optimum(0.8, 0.2, 4.0), 1e-12);
}

TEST(Waterfilling, BoundaryTwoFile) {
  const auto s = waterfilling_M1(PopularityProfile({0.8, 0.2}), 1.0);
  EXPECT_EQ(s.vector(), (std::vector<double>{1.0, 0.0}));
}

TEST(Waterfilling, MatchesBisectionOnTwoFiles) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double p1 = u(rng), c = 0.1 + 8.0 * u(rng);
    const auto s = waterfilling_M1(PopularityProfile({p1, 1.0 - p1}), c);
    EXPECT_NEAR(s[0], two_file_optimum(p1, 1.0 - p1, c), 1e-9);
  }
}

TEST(Waterfilling, RequiresSingleSlot) {
  EXPECT_THROW(waterfilling_M1(zipf_profile(3, 1.0), with_neighbor_mean(1.0, 3, 2)), UnsupportedError);
  EXPECT_THROW(waterfilling_M1(zipf_profile(3, 1.0), 0.0), ParameterError);
}

TEST(BruteForce, BoundaryCase) {
  const auto r = brute_force_optimum(PopularityProfile({0.8, 0.2}), with_neighbor_mean(1.0, 2, 1), 0.01);
  EXPECT_EQ(r.strategy.vector(), (std::vector<double>{1.0, 0.0}));
  EXPECT_NEAR(r.objective, 0.8 * std::exp(-1.0) + 0.2, 1e-15);
}

TEST(BruteForce, DegenerateProfile) {
  const auto r = brute_force_optimum(PopularityProfile({1.0, 0.0}), with_neighbor_mean(2.0, 2, 3), 0.05);
  EXPECT_EQ(r.strategy.vector(), (std::vector<double>{1.0, 0.0}));
}

TEST(BruteForce, RefusesLargeCatalog) {
  EXPECT_THROW(brute_force_optimum(zipf_profile(5, 1.0), with_neighbor_mean(1.0, 5, 1), 0.1), UnsupportedError);
}

TEST(OptimizeStrategy, SingleFile) {
  const auto cfg = with_neighbor_mean(1.5, 1, 2);
  const auto r = optimize_strategy(PopularityProfile({1.0}), cfg);
  EXPECT_EQ(r.strategy.vector(), (std::vector<double>{1.0}));
  EXPECT_NEAR(r.objective, std::exp(-1.5), 1e-15);
}

TEST(OptimizeStrategy, InteriorTwoFile) {
  const auto r = optimize_strategy(PopularityProfile({0.8, 0.2}), with_neighbor_mean(4.0, 2, 1));
  EXPECT_NEAR(r.strategy[0], 0.6733, 1e-4);
  EXPECT_NEAR(r.strategy[1], 0.3267, 1e-4);
  EXPECT_NEAR(r.objective, 0.10826822658929015, 1e-8);
  EXPECT_TRUE(r.converged);
}

TEST(OptimizeStrategy, BoundaryTwoFile) {
  const auto r = optimize_strategy(PopularityProfile({0.8, 0.2}), with_neighbor_mean(1.0, 2, 1));
  EXPECT_NEAR(r.strategy[0], 1.0, 1e-9);
  EXPECT_NEAR(r.objective, 0.4943035529371539, 1e-9);
}

TEST(OptimizeStrategy, MatchesWaterfillingForSingleSlot) {
  Rng rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const std::size_t N = 2 + k % 7;
    const auto cfg = with_neighbor_mean(0.3 + 6.0 * u(rng), N, 1);
    const auto p = zipf_profile(N, 1.5 * u(rng));
    const auto r = optimize_strategy(p, cfg, {.restarts = 4, .seed = static_cast<std::uint64_t>(k)});
    const auto w = waterfilling_M1(p, cfg);
    for (std::size_t i = 0; i < N; ++i) EXPECT_NEAR(r.strategy[i], w[i], 1e-4) << "k=" << k << " i=" << i;
  }
}

TEST(OptimizeStrategy, NoWorseThanBruteForceGrid) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const auto cfg = with_neighbor_mean(0.5 + 4.0 * u(rng), 3, 2 + k % 3);
    const PopularityProfile p(random_simplex(3, rng));
    const auto r = optimize_strategy(p, cfg, {.restarts = 6});
    const auto b = brute_force_optimum(p, cfg, 0.01);
    EXPECT_LE(r.objective, b.objective + 1e-3);
  }
}

TEST(OptimizeStrategy, BeatsUniformAndStaysOnSimplex) {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const std::size_t N = 1 + k % 9;
    const auto cfg = with_neighbor_mean(0.1 + 5.0 * u(rng), N, 1 + k % 4);
    const PopularityProfile p(random_simplex(N, rng));
    const auto r = optimize_strategy(p, cfg, {.restarts = 3});
    EXPECT_LE(r.objective, offloading_loss(uniform_strategy(N), p, cfg) + 1e-15);
    double sum = 0.0;
    for (double x : r.strategy.values()) {
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, kSimplexTolerance);
  }
}

TEST(OptimizeStrategy, MonotoneAlignment) {
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t N = 2 + k % 6;
    const auto cfg = with_neighbor_mean(0.2 + 5.0 * u(rng), N, 1 + k % 4);
    const PopularityProfile p(random_simplex(N, rng));
    const auto r = optimize_strategy(p, cfg, {.restarts = 4, .seed = static_cast<std::uint64_t>(k)});
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        if (p[i] > p[j]) EXPECT_GE(r.strategy[i], r.strategy[j] - 1e-6) << "k=" << k;
  }
}

TEST(OptimizeStrategy, BacktrackingTraceIsNonincreasing) {
  const auto cfg = with_neighbor_mean(3.0, 6, 2);
  const auto r = optimize_strategy(zipf_profile(6, 0.9), cfg, {.restarts = 5});
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k], r.trace[k - 1]);
}

TEST(OptimizeStrategy, FixedStepStillImprovesOnUniform) {
  const auto cfg = with_neighbor_mean(2.0, 4, 1);
  const auto p = zipf_profile(4, 1.0);
  const auto r = optimize_strategy(p, cfg, {.restarts = 2, .step_rule = StepRule::fixed, .fixed_step = 0.2});
  EXPECT_LE(r.objective, offloading_loss(uniform_strategy(4), p, cfg));
  EXPECT_NEAR(r.objective, offloading_loss(waterfilling_M1(p, cfg), p, cfg), 1e-6);
}

TEST(OptimizeStrategy, IterationCapReportsNonConvergence) {
  const auto cfg = with_neighbor_mean(2.0, 5, 2);
  const auto r = optimize_strategy(zipf_profile(5, 1.0), cfg, {.restarts = 1, .max_iterations = 1});
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.objective, offloading_loss(uniform_strategy(5), zipf_profile(5, 1.0), cfg));
}

TEST(OptimizeStrategy, DeterministicAcrossWorkers) {
  const auto cfg = with_neighbor_mean(2.0, 5, 3);
  const auto p = zipf_profile(5, 0.7);
  const auto a = optimize_strategy(p, cfg, {.restarts = 8, .seed = 5, .workers = 1});
  const auto b = optimize_strategy(p, cfg, {.restarts = 8, .seed = 5, .workers = 4});
  EXPECT_EQ(a.strategy, b.strategy);
  EXPECT_EQ(a.restart_objectives, b.restart_objectives);
  EXPECT_EQ(a.winning_restart, b.winning_restart);
}

TEST(OptimizeStrategy, InvalidOptionsRejected) {
  EXPECT_THROW(optimize_strategy(zipf_profile(2, 1), NetworkConfig{}, {.restarts = 0}), ParameterError);
  EXPECT_THROW(optimize_strategy(zipf_profile(2, 1), NetworkConfig{}, {.tolerance = 0.0}), ParameterError);
}
