#pragma once

// Popularity estimators: empirical request frequencies and the pooled
// transfer-learning estimate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "caching.hpp"
#include "error.hpp"
#include "simulation.hpp"

namespace randcache {

/// Per-file request counts; total == sum of counts.
struct CountVector {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  explicit CountVector(std::size_t N = 0) : counts(N, 0) {}

  void add(std::size_t file) {
    if (file < 1 || file > counts.size()) throw DataError("file index outside [1, N]");
    ++counts[file - 1];
    ++total;
  }

  friend bool operator==(const CountVector&, const CountVector&) = default;
};

inline CountVector target_counts(const RequestLog& log, std::size_t N) {
  CountVector c(N);
  for (const auto& user : log.users)
    for (std::size_t f : user.files) c.add(f);
  return c;
}

inline CountVector source_counts(const SourceSamples& samples, std::size_t N) {
  CountVector c(N);
  for (std::size_t f : samples.indices) c.add(f);
  return c;
}

/// Relative frequencies counts_i / total.
inline PopularityProfile profile_from_counts(const CountVector& c) {
  if (c.total == 0) throw NoSamplesError();
  std::vector<double> p(c.counts.size());
  const double n = static_cast<double>(c.total);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(c.counts[i]) / n;
  return PopularityProfile{std::move(p)};
}

inline PopularityProfile estimate_popularity(const RequestLog& log, std::size_t N) {
  return profile_from_counts(target_counts(log, N));
}

/// Pooled estimate (target_i + source_i) / (target_total + source_total).
inline PopularityProfile tl_estimate(const CountVector& target, const CountVector& source) {
  if (target.counts.size() != source.counts.size())
    throw ParameterError("tl_estimate: target and source catalogs differ in size");
  CountVector pooled(target.counts.size());
  for (std::size_t i = 0; i < pooled.counts.size(); ++i)
    pooled.counts[i] = target.counts[i] + source.counts[i];
  pooled.total = target.total + source.total;
  return profile_from_counts(pooled);
}

/// Sup-norm distance max_i |p_i - q_i|.
inline double sup_distance(const PopularityProfile& p, const PopularityProfile& q) {
  if (p.size() != q.size()) throw ParameterError("sup_distance: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d = std::max(d, std::abs(p[i] - q[i]));
  return d;
}

}  // namespace randcache
