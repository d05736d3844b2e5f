#pragma once

// Monte Carlo estimate of the offloading loss and generation of request traces
// and source-domain samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <vector>

#include "caching.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "spatial.hpp"

namespace randcache {

/// One realization of 1{file not held by any SBS within gamma of the origin}.
/// SBSs are drawn from PPP(lambda_s) on the disk of radius gamma; each fills
/// its M slots i.i.d. from the strategy.
inline bool simulate_miss_event(CategoricalSampler& cache_sampler, std::size_t file,
                                const NetworkConfig& config, Rng& rng) {
  const Region disk{{0.0, 0.0}, config.gamma};
  const PointSet sbs = sample_ppp(config.lambda_s, disk, rng);
  for (const Point& s : sbs) {
    if (squared_distance(s, disk.center) >= config.gamma * config.gamma) continue;
    if (sample_cache(cache_sampler, config.M, rng).holds(file)) return false;
  }
  return true;
}

inline bool simulate_miss_event(const CachingStrategy& strategy, std::size_t file,
                                const NetworkConfig& config, Rng& rng) {
  if (file < 1 || file > strategy.size())
    throw ParameterError("simulate_miss_event: file index outside [1, N]");
  CategoricalSampler sampler(strategy.values());
  return simulate_miss_event(sampler, file, config, rng);
}

struct MonteCarloOptions {
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t workers = 0;  // 0 = hardware concurrency
};

struct MonteCarloEstimate {
  double mean = 0.0;    // time units
  double standard_error = 0.0;  // of the mean, time units
  std::uint64_t misses = 0;
  std::uint64_t trials = 0;
};

inline constexpr std::uint64_t kTrialsPerBlock = 4096;

/// Monte Carlo estimate of the offloading loss. Trials are grouped into fixed
/// blocks with seeds derived from (seed, block), so the estimate is identical
/// for any worker count.
inline MonteCarloEstimate mc_offloading_loss(const CachingStrategy& strategy,
                                             const PopularityProfile& profile,
                                             const NetworkConfig& config,
                                             const MonteCarloOptions& opts) {
  if (opts.trials < 1) throw ParameterError("mc_offloading_loss: trials must be at least 1");
  if (strategy.size() != profile.size())
    throw ParameterError("mc_offloading_loss: strategy and profile lengths differ");

  const std::uint64_t blocks = (opts.trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<std::uint64_t> block_misses(blocks, 0);
  parallel_for(blocks, opts.workers, [&](std::size_t b) {
    Rng rng = make_stream(opts.seed, {0x4d43ULL, b});
    CategoricalSampler files(profile.values());
    CategoricalSampler caches(strategy.values());
    const std::uint64_t begin = b * kTrialsPerBlock;
    const std::uint64_t end = std::min(opts.trials, begin + kTrialsPerBlock);
    std::uint64_t misses = 0;
    for (std::uint64_t t = begin; t < end; ++t)
      if (simulate_miss_event(caches, files(rng), config, rng)) ++misses;
    block_misses[b] = misses;
  });

  MonteCarloEstimate est;
  est.trials = opts.trials;
  for (std::uint64_t m : block_misses) est.misses += m;
  const double n = static_cast<double>(opts.trials);
  const double frac = static_cast<double>(est.misses) / n;
  est.mean = config.miss_delay() * frac;
  const double var = opts.trials > 1 ? frac * (1.0 - frac) * n / (n - 1.0) : 0.0;
  est.standard_error = config.miss_delay() * std::sqrt(var / n);
  return est;
}

struct UserRequests {
  Point position;
  std::vector<double> times;       // ascending, within [0, tau]
  std::vector<std::size_t> files;  // 1-based, parallel to times
};

/// Requests observed by the BS over [0, tau] from users inside its coverage disk.
struct RequestLog {
  double tau = 0.0;
  std::vector<UserRequests> users;

  std::size_t total_requests() const noexcept {
    std::size_t n = 0;
    for (const auto& u : users) n += u.files.size();
    return n;
  }
};

/// Users from PPP(lambda_u) on the disk of radius R; each issues Poisson(lambda_r*tau)
/// requests at uniform times with files drawn from the profile.
inline RequestLog generate_requests(const PopularityProfile& profile, const NetworkConfig& config,
                                    double tau, Rng& rng) {
  if (!(tau >= 0.0)) throw ParameterError("generate_requests: tau must be nonnegative");
  RequestLog log;
  log.tau = tau;
  const PointSet users = sample_ppp(config.lambda_u, Region{{0.0, 0.0}, config.R}, rng);
  CategoricalSampler files(profile.values());
  log.users.reserve(users.size());
  for (const Point& position : users) {
    UserRequests u;
    u.position = position;
    const std::uint64_t k = poisson(rng, config.lambda_r * tau);
    u.times.reserve(k);
    u.files.reserve(k);
    for (std::uint64_t j = 0; j < k; ++j) u.times.push_back(tau * uniform01(rng));
    std::sort(u.times.begin(), u.times.end());
    for (std::uint64_t j = 0; j < k; ++j) u.files.push_back(files(rng));
    log.users.push_back(std::move(u));
  }
  return log;
}

/// Source-domain samples: file indices (1-based) drawn i.i.d. from Q.
struct SourceSamples {
  std::vector<std::size_t> indices;
};

inline SourceSamples generate_source_samples(const PopularityProfile& q, std::size_t m, Rng& rng) {
  SourceSamples s;
  s.indices.reserve(m);
  CategoricalSampler draw(q.values());
  for (std::size_t k = 0; k < m; ++k) s.indices.push_back(draw(rng));
  return s;
}

/// CSV with columns user_id,time,file_index (one row per request).
inline void write_requests_csv(std::ostream& out, const RequestLog& log) {
  out << "user_id,time,file_index\n";
  const auto old_precision = out.precision(17);
  for (std::size_t u = 0; u < log.users.size(); ++u) {
    const auto& user = log.users[u];
    for (std::size_t j = 0; j < user.files.size(); ++j)
      out << u << ',' << user.times[j] << ',' << user.files[j] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace randcache
