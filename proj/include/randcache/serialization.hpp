#pragma once

// JSON encodings (nlohmann::json) for the library's data types.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "caching.hpp"
#include "error.hpp"
#include "estimation.hpp"
#include "optimizer.hpp"
#include "simulation.hpp"

namespace randcache {

using json = nlohmann::json;

/// Profiles and strategies are plain JSON arrays of decimals.
template <typename Tag>
void to_json(json& j, const SimplexPoint<Tag>& p) {
  j = p.vector();
}

template <typename Tag>
void from_json(const json& j, SimplexPoint<Tag>& p) {
  if (!j.is_array()) throw DataError(std::string(Tag::name) + ": expected a JSON array");
  try {
    p = SimplexPoint<Tag>{j.get<std::vector<double>>()};
  } catch (const ParameterError& e) {
    throw DataError(e.what());
  }
}

inline void to_json(json& j, const CountVector& c) { j = json{{"counts", c.counts}, {"total", c.total}}; }

inline void from_json(const json& j, CountVector& c) {
  c.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  c.total = j.at("total").get<std::uint64_t>();
  std::uint64_t sum = 0;
  for (auto x : c.counts) sum += x;
  if (sum != c.total) throw DataError("count vector: total differs from sum of counts");
}

inline void to_json(json& j, const RequestLog& log) {
  json users = json::array();
  for (const auto& u : log.users)
    users.push_back({{"position", {u.position.x, u.position.y}}, {"times", u.times}, {"files", u.files}});
  j = json{{"tau", log.tau}, {"users", std::move(users)}};
}

inline void from_json(const json& j, RequestLog& log) {
  log.tau = j.at("tau").get<double>();
  if (!(log.tau >= 0.0)) throw DataError("request log: tau must be nonnegative");
  log.users.clear();
  for (const auto& ju : j.at("users")) {
    UserRequests u;
    const auto pos = ju.at("position").get<std::vector<double>>();
    if (pos.size() != 2) throw DataError("request log: position must have two coordinates");
    u.position = {pos[0], pos[1]};
    u.times = ju.at("times").get<std::vector<double>>();
    u.files = ju.at("files").get<std::vector<std::size_t>>();
    if (u.times.size() != u.files.size()) throw DataError("request log: times and files differ in length");
    for (std::size_t k = 0; k < u.times.size(); ++k) {
      if (!(u.times[k] >= 0.0 && u.times[k] <= log.tau)) throw DataError("request log: time outside [0, tau]");
      if (k > 0 && u.times[k] < u.times[k - 1]) throw DataError("request log: times not ascending");
      if (u.files[k] < 1) throw DataError("request log: file index below 1");
    }
    log.users.push_back(std::move(u));
  }
}

inline void to_json(json& j, const SourceSamples& s) { j = json{{"indices", s.indices}}; }

inline void from_json(const json& j, SourceSamples& s) {
  s.indices = j.at("indices").get<std::vector<std::size_t>>();
  for (auto f : s.indices)
    if (f < 1) throw DataError("source samples: file index below 1");
}

/// Finite numbers stay numeric; infinities become the string "infinite".
inline json number_or_infinite(double v) {
  if (std::isinf(v)) return "infinite";
  return v;
}

inline void to_json(json& j, const WaitingTimeBound& b) {
  j = json{{"finite", b.finite},
           {"value", number_or_infinite(b.value)},
           {"threshold", b.threshold},
           {"epsilon_bar", b.epsilon_bar},
           {"epsilon_pq", b.epsilon_pq},
           {"g_star", b.g_star},
           {"inner_log_argument", number_or_infinite(b.inner_log_argument)},
           {"Lambda", number_or_infinite(b.Lambda)}};
}

inline void to_json(json& j, const SourceSampleRequirement& r) {
  j = json{{"m_min", r.m_min},
           {"distance_ok", r.distance_ok},
           {"F", r.F},
           {"epsilon_pq", r.epsilon_pq},
           {"distance_threshold", r.distance_threshold}};
}

inline void to_json(json& j, const MonteCarloEstimate& e) {
  j = json{{"mean", e.mean}, {"stderr", e.standard_error}, {"misses", e.misses}, {"trials", e.trials}};
}

inline void to_json(json& j, const OptimizationResult& r) {
  j = json{{"strategy", r.strategy},
           {"objective", r.objective},
           {"converged", r.converged},
           {"iterations", r.iterations},
           {"winning_restart", r.winning_restart},
           {"restart_objectives", r.restart_objectives},
           {"trace", r.trace}};
}

}  // namespace randcache
