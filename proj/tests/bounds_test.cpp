#include "randcache/bounds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"

using namespace randcache;

namespace {

// N = 10, delta = 0.1, pi R^2 = 314.159, lambda_u = 0.1, lambda_r = 1,
// B/R0 = 1, epsilon = 0.5, so epsilon_bar = 0.025 under sup = N.
BoundInputs reference_inputs() {
  BoundInputs in;
  in.config.N = 10;
  in.config.R = std::sqrt(314.159 / std::numbers::pi);
  in.config.lambda_u = 0.1;
  in.config.lambda_r = 1.0;
  in.config.B = 1.0;
  in.config.R0 = 1.0;
  in.config.gamma = std::sqrt(3.14159 / std::numbers::pi);  // lambda_u pi gamma^2 = 0.314159
  in.epsilon = 0.5;
  in.delta = 0.1;
  return in;
}

}  // namespace

TEST(SupGSum, ConservativeIsN) {
  NetworkConfig c;
  c.N = 10;
  EXPECT_EQ(sup_g_sum(c, SupMode::conservative_N), 10.0);
}

TEST(SupGSum, NumericSingleSlotIsVertex) {
  NetworkConfig c;
  c.N = 3;
  c.M = 1;
  c.gamma = 1.0;
  c.lambda_u = 1.0 / std::numbers::pi;
  EXPECT_NEAR(sup_g_sum(c, SupMode::numeric), 1.0 + 2.0 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(sup_g_sum(c, SupMode::numeric), oracle::vertex_max_g_sum(3, 1, 1.0), 1e-12);
  EXPECT_NEAR(sup_g_sum(c, SupMode::numeric), 1.735759, 1e-6);
}

TEST(SupGSum, NumericDominatesRandomSimplexPoints) {
  Rng rng(5);
  std::exponential_distribution<double> e(1.0);
  for (std::size_t M : {1u, 2u, 3u, 6u})
    for (double a : {0.3, 1.0, 4.0, 12.0})
      for (std::size_t N : {2u, 5u, 9u}) {
        NetworkConfig c;
        c.N = N;
        c.M = M;
        c.gamma = 1.0;
        c.lambda_u = a / std::numbers::pi;
        const double sup = sup_g_sum(c, SupMode::numeric);
        EXPECT_LE(sup, static_cast<double>(N));
        double sampled = 0.0;
        for (int k = 0; k < 3000; ++k) {
          std::vector<double> x(N);
          double t = 0.0;
          // Sparse Dirichlet draws reach faces and vertices as well as the interior.
          const std::size_t support = 1 + k % N;
          for (std::size_t i = 0; i < support; ++i) t += (x[i] = e(rng));
          double v = 0.0;
          for (double xi : x) v += std::exp(-a * std::pow(1.0 - xi / t, static_cast<double>(M)));
          sampled = std::max(sampled, v);
        }
        EXPECT_GE(sup, sampled - 1e-9) << "M=" << M << " a=" << a << " N=" << N;
      }
}

TEST(EpsilonBar, HandValueAndScaling) {
  auto in = reference_inputs();
  EXPECT_NEAR(epsilon_bar(in), 0.025, 1e-15);
  const double base = epsilon_bar(in);
  in.config.B *= 2.0;
  EXPECT_NEAR(epsilon_bar(in), base / 2.0, 1e-15);
  in = reference_inputs();
  in.epsilon = 1e-300;
  EXPECT_NEAR(epsilon_bar(in), 0.0, 1e-299);
}

TEST(WaitingTimeTarget, BelowThresholdIsInfinite) {
  auto in = reference_inputs();
  in.config.lambda_u = 0.01;
  const auto b = waiting_time_target(in);
  EXPECT_FALSE(b.finite);
  EXPECT_TRUE(std::isinf(b.value));
  EXPECT_NEAR(b.threshold, 0.016865082224440605, 1e-9);
}

TEST(WaitingTimeTarget, HandValue) {
  const auto b = waiting_time_target(reference_inputs());
  ASSERT_TRUE(b.finite);
  EXPECT_NEAR(b.value, 147.85667796618708, 1e-6);
  EXPECT_NEAR(b.value, 147.85, 0.01);
  EXPECT_NEAR(b.g_star, 1.0 - std::exp(-2.0 * 0.025 * 0.025), 1e-15);
  EXPECT_NEAR(b.inner_log_argument, 1.0 - std::log(200.0) / 31.4159, 1e-12);
}

TEST(WaitingTimeTarget, VanishesAsUserDensityGrows) {
  auto in = reference_inputs();
  double prev = waiting_time_target(in).value;
  for (double lu : {1.0, 10.0, 1e3, 1e6}) {
    in.config.lambda_u = lu;
    const double v = waiting_time_target(in).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-3);
  EXPECT_GT(prev, 0.0);
}

TEST(WaitingTimeTarget, InvalidDeltaRejected) {
  auto in = reference_inputs();
  in.delta = 1.0;
  EXPECT_THROW(waiting_time_target(in), ParameterError);
  in.delta = 0.0;
  EXPECT_THROW(waiting_time_target(in), ParameterError);
}

TEST(WaitingTimeTarget, FinitenessSwitchesExactlyAtThreshold) {
  auto in = reference_inputs();
  const double L = waiting_time_target(in).threshold;
  for (double f : {0.5, 0.9, 0.999, 1.0}) {
    in.config.lambda_u = L * f;
    EXPECT_FALSE(waiting_time_target(in).finite) << f;
  }
  for (double f : {1.000001, 1.01, 2.0, 100.0}) {
    in.config.lambda_u = L * f;
    EXPECT_TRUE(waiting_time_target(in).finite) << f;
  }
  in.config.lambda_u = std::nextafter(L, 1.0);
  EXPECT_TRUE(waiting_time_target(in).finite);
}

TEST(WaitingTimeTarget, MonotoneInParameters) {
  const auto base = reference_inputs();
  auto vary = [&](auto mutate) {
    std::vector<double> out;
    for (double s : {1.0, 1.5, 2.0, 4.0, 8.0}) {
      auto in = base;
      mutate(in, s);
      out.push_back(waiting_time_target(in).value);
    }
    return out;
  };
  for (const auto& series : {vary([](BoundInputs& in, double s) { in.config.lambda_u *= s; }),
                             vary([](BoundInputs& in, double s) { in.config.lambda_r *= s; }),
                             vary([](BoundInputs& in, double s) { in.epsilon *= s; }),
                             vary([](BoundInputs& in, double s) { in.config.R *= std::sqrt(s); })})
    for (std::size_t k = 1; k < series.size(); ++k) EXPECT_LE(series[k], series[k - 1]);
}

TEST(WaitingTimeSimplified, HandValue) {
  EXPECT_NEAR(waiting_time_simplified(reference_inputs(), false), 134.92065779552485, 1e-6);
}

TEST(WaitingTimeSimplified, PerUserScalesWithRateSquared) {
  auto in = reference_inputs();
  in.config.lambda_r = 2.0;
  EXPECT_NEAR(waiting_time_simplified(in, true), 4.0 * waiting_time_simplified(in, false), 1e-9);
}

TEST(WaitingTimeSimplified, DoublingCatalog) {
  for (double delta : {0.01, 0.1, 0.5})
    for (std::size_t N : {1u, 10u, 123u}) {
      auto in = reference_inputs();
      in.delta = delta;
      in.config.N = N;
      const double a = waiting_time_simplified(in, false);
      in.config.N = 2 * N;
      const double ratio = waiting_time_simplified(in, false) / a;
      const double n = static_cast<double>(N);
      const double expected = 4.0 * std::log(4.0 * n / delta) / std::log(2.0 * n / delta);
      EXPECT_NEAR(ratio / expected, 1.0, 1e-9);
    }
}

TEST(WaitingTimeTl, ReducesToTargetBound) {
  for (double lu : {0.005, 0.02, 0.1, 3.0}) {
    auto in = reference_inputs();
    in.config.lambda_u = lu;
    const auto t = waiting_time_target(in);
    const auto tl = waiting_time_tl(in, 0, 0.0);
    EXPECT_EQ(t.finite, tl.finite);
    EXPECT_EQ(t.value, tl.value);
    EXPECT_EQ(t.threshold, tl.threshold);
    EXPECT_EQ(t.g_star, tl.g_star);
    EXPECT_EQ(t.inner_log_argument, tl.inner_log_argument);
  }
}

TEST(WaitingTimeTl, ManySourceSamplesRemoveThreshold) {
  auto in = reference_inputs();
  const auto b = waiting_time_tl(in, 5000, 0.0);
  EXPECT_LT(b.threshold, 0.0);
  EXPECT_LT(b.Lambda, 0.0);
  EXPECT_TRUE(b.finite);
  EXPECT_EQ(b.value, 0.0);
  in.config.lambda_u = 1e-9;
  EXPECT_TRUE(waiting_time_tl(in, 5000, 0.0).finite);
  in.config.lambda_u = 0.0;
  const auto zero = waiting_time_tl(in, 5000, 0.0);
  EXPECT_TRUE(zero.finite);
  EXPECT_EQ(zero.value, 0.0);
}

TEST(WaitingTimeTl, AccuracyFloor) {
  const auto in = reference_inputs();
  EXPECT_THROW(waiting_time_tl(in, 10, 0.025), InfeasibleError);
  EXPECT_THROW(waiting_time_tl(in, 10, 0.3), InfeasibleError);
  EXPECT_THROW(waiting_time_tl(in, 10, -0.1), ParameterError);
  EXPECT_NO_THROW(waiting_time_tl(in, 10, 0.02));
}

TEST(WaitingTimeTl, FinitenessSwitchesExactlyAtRho) {
  auto in = reference_inputs();
  const std::uint64_t m = 1000;
  const double d = 0.01;
  const double rho = waiting_time_tl(in, m, d).threshold;
  ASSERT_GT(rho, 0.0);
  for (double f : {0.3, 0.99, 1.0}) {
    in.config.lambda_u = rho * f;
    EXPECT_FALSE(waiting_time_tl(in, m, d).finite);
  }
  for (double f : {1.0001, 1.5, 30.0}) {
    in.config.lambda_u = rho * f;
    EXPECT_TRUE(waiting_time_tl(in, m, d).finite);
  }
}

TEST(TlMinSourceSamples, HandValueAtZeroDistance) {
  const auto r = tl_min_source_samples(reference_inputs(), 0.0);
  const double A = 31.4159, L = std::log(200.0) / A;
  EXPECT_NEAR(r.F, A * (1.0 - std::exp(1.0) * (1.0 - L)), 1e-9);
  EXPECT_NEAR(r.F, -39.57905, 1e-4);
  EXPECT_EQ(r.m_min, 35902u);
  EXPECT_TRUE(r.distance_ok);
}

TEST(TlMinSourceSamples, DistanceCondition) {
  const auto r = tl_min_source_samples(reference_inputs(), 0.02);
  EXPECT_NEAR(r.distance_threshold, 0.5 / (2.0 * 0.314159 * 10.0), 1e-9);
  EXPECT_NEAR(r.distance_threshold, 0.0796, 1e-4);
  EXPECT_TRUE(r.distance_ok);
  // 0.05 satisfies the distance condition but exceeds epsilon_bar = 0.025, so
  // only the condition itself can be evaluated there.
  EXPECT_LT(0.05, r.distance_threshold);
  EXPECT_THROW(tl_min_source_samples(reference_inputs(), 0.05), InfeasibleError);
  EXPECT_THROW(tl_min_source_samples(reference_inputs(), 0.025), InfeasibleError);
}

TEST(TlMinSourceSamples, DistanceConditionFailsWhenFar) {
  auto in = reference_inputs();
  in.config.gamma *= 10.0;  // threshold shrinks by 100
  EXPECT_FALSE(tl_min_source_samples(in, 0.01).distance_ok);
}

TEST(TlDominance, PooledBoundNoWorseAboveMinSamples) {
  auto in = reference_inputs();
  for (double lu : {0.02, 0.03, 0.05, 0.08, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) {
    in.config.lambda_u = lu;
    const auto req = tl_min_source_samples(in, 0.0);
    ASSERT_TRUE(req.distance_ok);
    for (std::uint64_t m : {req.m_min, req.m_min + 1000, 3 * req.m_min}) {
      const auto tl = waiting_time_tl(in, m, 0.0);
      const auto target = waiting_time_target(in);
      ASSERT_TRUE(tl.finite);
      EXPECT_LE(tl.value, target.value) << "lambda_u=" << lu << " m=" << m;
    }
  }
}
