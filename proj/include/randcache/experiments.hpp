#pragma once

// Experiment specifications, the experiment runners behind the command-line
// tool, and report emission (report.json + rows.csv).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "caching.hpp"
#include "error.hpp"
#include "estimation.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "serialization.hpp"
#include "simulation.hpp"

namespace randcache {

inline constexpr const char* kCodeVersion = "randcache 1.0.0";

enum class ExperimentKind { validate_theorem1, waiting_time_sweep, tl_comparison, optimize, bounds };

inline const char* to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::validate_theorem1: return "validate_theorem1";
    case ExperimentKind::waiting_time_sweep: return "waiting_time_sweep";
    case ExperimentKind::tl_comparison: return "tl_comparison";
    case ExperimentKind::optimize: return "optimize";
    case ExperimentKind::bounds: return "bounds";
  }
  return "?";
}

/// Either a Zipf exponent or an explicit probability vector.
struct ProfileSource {
  std::optional<double> zipf_exponent = 0.8;
  std::vector<double> explicit_values;

  PopularityProfile resolve(std::size_t N, const std::string& path) const {
    try {
      if (zipf_exponent) return zipf_profile(N, *zipf_exponent);
      if (explicit_values.size() != N) throw ConfigError(path + ".explicit", "length must equal network.N");
      return PopularityProfile{explicit_values};
    } catch (const ParameterError& e) {
      throw ConfigError(path, e.what());
    }
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::validate_theorem1;
  NetworkConfig network;
  ProfileSource profile;
  std::optional<ProfileSource> q_profile;  // source-domain distribution; defaults to profile
  double epsilon = 0.5;
  double delta = 0.1;
  SupMode sup_mode = SupMode::conservative_N;
  double tau = 0.1;                     // observation window for tl_comparison
  std::vector<double> tau_grid;         // waiting_time_sweep
  std::vector<double> lambda_u_grid;    // bounds
  std::vector<std::uint64_t> m_grid;    // tl_comparison
  std::uint64_t m = 0;                  // bounds
  double distance = 0.0;                // bounds
  std::uint64_t trials = 200;
  std::uint64_t seed = 1;
  std::size_t workers = 0;              // 0 = hardware concurrency; never affects results
  std::string output_dir = "out";
  SolverOptions solver;

  BoundInputs bound_inputs() const { return {network, epsilon, delta, sup_mode}; }
};

/// Defaults for each experiment kind; a config file overrides any subset.
inline ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  s.network.lambda_u = 0.1;
  s.network.lambda_s = 2.0 / std::numbers::pi;  // lambda_s pi gamma^2 = 2
  s.network.lambda_b = 0.0;
  s.network.lambda_r = 1.0;
  s.network.R = 10.0;
  s.network.gamma = 1.0;
  s.network.B = 1.0;
  s.network.R0 = 1.0;
  s.network.N = 5;
  s.network.M = 2;
  s.solver.restarts = 16;
  switch (kind) {
    case ExperimentKind::validate_theorem1: s.trials = 1'000'000; break;
    case ExperimentKind::waiting_time_sweep:
      s.trials = 200;
      s.tau_grid = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
      s.solver.restarts = 2;
      break;
    case ExperimentKind::tl_comparison:
      s.trials = 200;
      s.tau = 0.1;
      s.m_grid = {0, 100, 1000, 10000};
      s.solver.restarts = 2;
      break;
    case ExperimentKind::optimize: s.trials = 1; break;
    case ExperimentKind::bounds:
      s.trials = 1;
      s.lambda_u_grid = {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Experiment spec (de)serialization. Unknown keys are rejected with their path.

namespace detail {

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(path, "expected a JSON object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

template <typename T>
void read(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  const std::string field = path.empty() ? key : path + "." + key;
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (!j.at(key).is_number_unsigned()) throw ConfigError(field, "expected a nonnegative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.at(key).is_number()) throw ConfigError(field, "expected a number");
    }
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

inline ProfileSource read_profile(const json& j, const std::string& path) {
  reject_unknown(j, path, {"zipf", "explicit"});
  if (j.contains("zipf") == j.contains("explicit"))
    throw ConfigError(path, "exactly one of 'zipf' or 'explicit' is required");
  ProfileSource p;
  if (j.contains("zipf")) {
    double s = 0.0;
    read(j, "zipf", path, s);
    p.zipf_exponent = s;
  } else {
    p.zipf_exponent.reset();
    read(j, "explicit", path, p.explicit_values);
  }
  return p;
}

inline json profile_json(const ProfileSource& p) {
  if (p.zipf_exponent) return json{{"zipf", *p.zipf_exponent}};
  return json{{"explicit", p.explicit_values}};
}

}  // namespace detail

inline json to_json_spec(const ExperimentSpec& s) {
  const NetworkConfig& n = s.network;
  json j{{"kind", to_string(s.kind)},
         {"network",
          {{"lambda_u", n.lambda_u}, {"lambda_s", n.lambda_s}, {"lambda_b", n.lambda_b},
           {"lambda_r", n.lambda_r}, {"R", n.R}, {"gamma", n.gamma}, {"B", n.B}, {"R0", n.R0},
           {"N", n.N}, {"M", n.M}, {"formula_mode", to_string(n.formula_mode)}}},
         {"profile", detail::profile_json(s.profile)},
         {"epsilon", s.epsilon},
         {"delta", s.delta},
         {"sup_mode", to_string(s.sup_mode)},
         {"tau", s.tau},
         {"tau_grid", s.tau_grid},
         {"lambda_u_grid", s.lambda_u_grid},
         {"m_grid", s.m_grid},
         {"m", s.m},
         {"distance", s.distance},
         {"trials", s.trials},
         {"seed", s.seed},
         {"output_dir", s.output_dir},
         {"solver",
          {{"restarts", s.solver.restarts}, {"max_iterations", s.solver.max_iterations},
           {"step_rule", to_string(s.solver.step_rule)}, {"tolerance", s.solver.tolerance},
           {"grid_resolution", s.solver.grid_resolution}, {"fixed_step", s.solver.fixed_step}}}};
  if (s.q_profile) j["q_profile"] = detail::profile_json(*s.q_profile);
  return j;
}

inline void validate_spec(const ExperimentSpec& s) {
  try {
    s.network.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("network", e.what());
  }
  s.profile.resolve(s.network.N, "profile");
  if (s.q_profile) s.q_profile->resolve(s.network.N, "q_profile");
  if (s.trials < 1) throw ConfigError("trials", "must be at least 1");
  if (!(s.epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
  if (!(s.delta > 0.0 && s.delta < 1.0)) throw ConfigError("delta", "must lie in (0, 1)");
  if (!(s.tau >= 0.0)) throw ConfigError("tau", "must be nonnegative");
  if (!(s.distance >= 0.0 && s.distance <= 1.0)) throw ConfigError("distance", "must lie in [0, 1]");
  for (double t : s.tau_grid)
    if (!(t >= 0.0)) throw ConfigError("tau_grid", "entries must be nonnegative");
  for (double l : s.lambda_u_grid)
    if (!(l >= 0.0)) throw ConfigError("lambda_u_grid", "entries must be nonnegative");
  if (s.kind == ExperimentKind::waiting_time_sweep && s.tau_grid.empty())
    throw ConfigError("tau_grid", "must be nonempty for waiting_time_sweep");
  if (s.kind == ExperimentKind::tl_comparison && s.m_grid.empty())
    throw ConfigError("m_grid", "must be nonempty for tl_comparison");
  if (s.kind == ExperimentKind::bounds && s.lambda_u_grid.empty())
    throw ConfigError("lambda_u_grid", "must be nonempty for bounds");
  try {
    s.solver.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("solver", e.what());
  }
}

/// Applies a JSON config on top of `base`. The config's "kind", when present,
/// must agree with base.kind.
inline ExperimentSpec apply_config(ExperimentSpec s, const json& j) {
  using detail::read;
  detail::reject_unknown(j, "", {"kind", "network", "profile", "q_profile", "epsilon", "delta", "sup_mode",
                                 "tau", "tau_grid", "lambda_u_grid", "m_grid", "m", "distance", "trials",
                                 "seed", "workers", "output_dir", "solver"});
  if (j.contains("kind")) {
    std::string kind;
    read(j, "kind", "", kind);
    if (kind != to_string(s.kind))
      throw ConfigError("kind", "config is for '" + kind + "' but the command runs '" + to_string(s.kind) + "'");
  }
  if (j.contains("network")) {
    const json& n = j.at("network");
    detail::reject_unknown(n, "network", {"lambda_u", "lambda_s", "lambda_b", "lambda_r", "R", "gamma", "B",
                                          "R0", "N", "M", "formula_mode"});
    read(n, "lambda_u", "network", s.network.lambda_u);
    read(n, "lambda_s", "network", s.network.lambda_s);
    read(n, "lambda_b", "network", s.network.lambda_b);
    read(n, "lambda_r", "network", s.network.lambda_r);
    read(n, "R", "network", s.network.R);
    read(n, "gamma", "network", s.network.gamma);
    read(n, "B", "network", s.network.B);
    read(n, "R0", "network", s.network.R0);
    read(n, "N", "network", s.network.N);
    read(n, "M", "network", s.network.M);
    if (n.contains("formula_mode")) {
      std::string mode;
      read(n, "formula_mode", "network", mode);
      if (mode == "appendix") s.network.formula_mode = FormulaMode::appendix;
      else if (mode == "main_text") s.network.formula_mode = FormulaMode::main_text;
      else throw ConfigError("network.formula_mode", "expected 'appendix' or 'main_text'");
    }
  }
  if (j.contains("profile")) s.profile = detail::read_profile(j.at("profile"), "profile");
  if (j.contains("q_profile")) s.q_profile = detail::read_profile(j.at("q_profile"), "q_profile");
  read(j, "epsilon", "", s.epsilon);
  read(j, "delta", "", s.delta);
  if (j.contains("sup_mode")) {
    std::string mode;
    read(j, "sup_mode", "", mode);
    if (mode == "conservative_N") s.sup_mode = SupMode::conservative_N;
    else if (mode == "numeric") s.sup_mode = SupMode::numeric;
    else throw ConfigError("sup_mode", "expected 'conservative_N' or 'numeric'");
  }
  read(j, "tau", "", s.tau);
  read(j, "tau_grid", "", s.tau_grid);
  read(j, "lambda_u_grid", "", s.lambda_u_grid);
  read(j, "m_grid", "", s.m_grid);
  read(j, "m", "", s.m);
  read(j, "distance", "", s.distance);
  read(j, "trials", "", s.trials);
  read(j, "seed", "", s.seed);
  read(j, "workers", "", s.workers);
  read(j, "output_dir", "", s.output_dir);
  if (j.contains("solver")) {
    const json& o = j.at("solver");
    detail::reject_unknown(o, "solver", {"restarts", "max_iterations", "step_rule", "tolerance",
                                         "grid_resolution", "fixed_step"});
    read(o, "restarts", "solver", s.solver.restarts);
    read(o, "max_iterations", "solver", s.solver.max_iterations);
    read(o, "tolerance", "solver", s.solver.tolerance);
    read(o, "grid_resolution", "solver", s.solver.grid_resolution);
    read(o, "fixed_step", "solver", s.solver.fixed_step);
    if (o.contains("step_rule")) {
      std::string rule;
      read(o, "step_rule", "solver", rule);
      if (rule == "fixed") s.solver.step_rule = StepRule::fixed;
      else if (rule == "backtracking") s.solver.step_rule = StepRule::backtracking;
      else throw ConfigError("solver.step_rule", "expected 'fixed' or 'backtracking'");
    }
  }
  return s;
}

inline ExperimentSpec load_spec(ExperimentKind kind, const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("--config", "cannot open " + config_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", e.what());
  }
  return apply_config(default_spec(kind), j);
}

// ---------------------------------------------------------------------------
// Reports

struct Check {
  std::string name;
  bool passed = true;
  bool skipped = false;
  std::string detail;
};

struct Report {
  json metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<Check> checks;
  json statistics = json::object();

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.skipped || c.passed; });
  }

  std::string csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
      out += '\n';
    }
    return out;
  }

  json summary() const {
    json checks_json = json::array();
    for (const auto& c : checks)
      checks_json.push_back({{"name", c.name}, {"pass", c.passed}, {"skipped", c.skipped}, {"detail", c.detail}});
    return json{{"pass", passed()}, {"checks", checks_json}, {"statistics", statistics}};
  }

  json to_json() const {
    return json{{"metadata", metadata}, {"columns", columns}, {"row_count", rows.size()}, {"summary", summary()}};
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "report.json") << to_json().dump(2) << '\n';
    std::ofstream(dir / "rows.csv", std::ios::binary) << csv();
  }
};

/// 17 significant digits; "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

inline std::string format_strategy(const CachingStrategy& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ";" : "") + format_number(s[i]);
  return out;
}

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Report new_report(const ExperimentSpec& spec) {
  Report r;
  r.metadata = json{{"spec", to_json_spec(spec)},
                    {"seed", spec.seed},
                    {"timestamp", utc_timestamp()},
                    {"code_version", kCodeVersion}};
  return r;
}

/// Linear-interpolation quantile of the finite values; nan when none.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

/// Spearman rank correlation; nan when either series is constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Loss gap T(Pi_hat*, P) - T*, where Pi_hat* minimizes the loss under `estimate`.
inline double loss_gap(const PopularityProfile& estimate, const PopularityProfile& truth,
                       const NetworkConfig& config, const SolverOptions& solver, double optimal_loss) {
  const auto fitted = optimize_strategy(estimate, config, solver);
  return offloading_loss(fitted.strategy, truth, config) - optimal_loss;
}

struct GapSample {
  bool no_sample = false;
  double gap = std::numeric_limits<double>::quiet_NaN();
};

struct GapSummary {
  std::uint64_t no_sample = 0;
  std::vector<double> gaps;  // trials with an estimate, in trial order

  static GapSummary of(const std::vector<GapSample>& samples) {
    GapSummary s;
    for (const auto& g : samples) {
      if (g.no_sample) ++s.no_sample;
      else s.gaps.push_back(g.gap);
    }
    return s;
  }

  /// Fraction of all trials with gap > epsilon; no-sample trials count as exceedances.
  double exceed_fraction(double epsilon, std::uint64_t trials) const {
    std::uint64_t bad = no_sample;
    for (double g : gaps) bad += g > epsilon;
    return static_cast<double>(bad) / static_cast<double>(trials);
  }
};

inline SolverOptions inner_solver(const ExperimentSpec& spec) {
  SolverOptions o = spec.solver;
  o.seed = derive_seed(spec.seed, {0x534f4cULL});
  o.workers = 1;
  return o;
}

// Target-only estimation gaps for `trials` independent logs over [0, tau].
inline std::vector<GapSample> target_gaps(const ExperimentSpec& spec, const PopularityProfile& truth,
                                          double optimal_loss, double tau, std::uint64_t stream) {
  const SolverOptions solver = inner_solver(spec);
  std::vector<GapSample> out(spec.trials);
  parallel_for(spec.trials, spec.workers, [&](std::size_t t) {
    Rng rng = make_stream(spec.seed, {0x5754ULL, stream, t});
    const auto log = generate_requests(truth, spec.network, tau, rng);
    const auto counts = target_counts(log, spec.network.N);
    if (counts.total == 0) {
      out[t].no_sample = true;
      return;
    }
    out[t].gap = loss_gap(profile_from_counts(counts), truth, spec.network, solver, optimal_loss);
  });
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

/// Closed-form offloading loss vs Monte Carlo for the uniform, optimized and
/// popularity-proportional strategies.
inline Report run_validate_theorem1(const ExperimentSpec& spec) {
  validate_spec(spec);
  Report report = detail::new_report(spec);
  const auto p = spec.profile.resolve(spec.network.N, "profile");
  const auto optimized = optimize_strategy(p, spec.network, detail::inner_solver(spec));
  const std::vector<std::pair<std::string, CachingStrategy>> strategies{
      {"uniform", uniform_strategy(spec.network.N)},
      {"optimized", optimized.strategy},
      {"popularity_proportional", proportional_strategy(p)}};

  report.columns = {"strategy", "closed_form", "mc_mean", "mc_stderr", "z"};
  std::size_t within = 0;
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    const auto& [name, strategy] = strategies[k];
    const double closed = offloading_loss(strategy, p, spec.network);
    const auto mc = mc_offloading_loss(strategy, p, spec.network,
                                       {.trials = spec.trials, .seed = derive_seed(spec.seed, {0x5431ULL, k}),
                                        .workers = spec.workers});
    const double diff = mc.mean - closed;
    double z = 0.0;
    if (mc.standard_error > 0.0) z = diff / mc.standard_error;
    else if (diff != 0.0) z = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    within += std::abs(z) <= 3.0;
    report.rows.push_back({name, format_number(closed), format_number(mc.mean), format_number(mc.standard_error),
                           format_number(z)});
    report.statistics[name] = {{"strategy", strategy}, {"closed_form", closed}, {"mc", mc}, {"z", z}};
  }
  const double fraction = static_cast<double>(within) / static_cast<double>(strategies.size());
  report.checks.push_back({"abs_z_le_3_in_80pct_rows", fraction >= 0.8, false,
                           std::to_string(within) + " of " + std::to_string(strategies.size()) + " rows within 3 sigma"});
  return report;
}

/// Loss gap of the target-only estimator across observation windows, next to
/// the waiting-time bounds.
inline Report run_waiting_time_sweep(const ExperimentSpec& spec) {
  validate_spec(spec);
  Report report = detail::new_report(spec);
  const auto p = spec.profile.resolve(spec.network.N, "profile");
  const auto inputs = spec.bound_inputs();
  const auto bound = waiting_time_target(inputs);
  const double simplified = waiting_time_simplified(inputs, false);
  const double optimal = optimize_strategy(p, spec.network, detail::inner_solver(spec)).objective;

  report.columns = {"label", "tau", "trials", "no_sample", "gap_q10", "gap_median", "gap_q90", "gap_mean",
                    "frac_gap_gt_epsilon", "bound_theorem2", "bound_simplified"};
  auto emit = [&](const std::string& label, double tau, const detail::GapSummary& s) {
    report.rows.push_back({label, format_number(tau), format_number(spec.trials), format_number(s.no_sample),
                           format_number(detail::quantile(s.gaps, 0.1)), format_number(detail::quantile(s.gaps, 0.5)),
                           format_number(detail::quantile(s.gaps, 0.9)), format_number(detail::mean(s.gaps)),
                           format_number(s.exceed_fraction(spec.epsilon, spec.trials)), format_number(bound.value),
                           format_number(simplified)});
  };

  std::vector<double> taus, medians;
  for (std::size_t k = 0; k < spec.tau_grid.size(); ++k) {
    const double tau = spec.tau_grid[k];
    const auto s = detail::GapSummary::of(detail::target_gaps(spec, p, optimal, tau, k));
    emit("grid", tau, s);
    if (!s.gaps.empty()) {
      taus.push_back(tau);
      medians.push_back(detail::quantile(s.gaps, 0.5));
    }
  }

  Check coverage{"coverage_at_theorem2_bound", true, false, ""};
  if (bound.finite) {
    const auto s = detail::GapSummary::of(
        detail::target_gaps(spec, p, optimal, bound.value, spec.tau_grid.size()));
    emit("theorem2_bound", bound.value, s);
    const double frac = s.exceed_fraction(spec.epsilon, spec.trials);
    coverage.passed = frac <= spec.delta;
    coverage.detail = "fraction with gap > epsilon = " + format_number(frac) + ", delta = " + format_number(spec.delta);
    report.statistics["coverage_fraction"] = frac;
  } else {
    coverage.skipped = true;
    coverage.detail = "lambda_u <= L: bound is infinite";
  }
  report.checks.push_back(coverage);

  Check trend{"median_gap_decreasing_in_tau", true, false, ""};
  const double rho = taus.size() >= 3 ? detail::spearman(taus, medians) : std::numeric_limits<double>::quiet_NaN();
  if (std::isnan(rho)) {
    trend.skipped = true;
    trend.detail = "fewer than three grid points with samples";
  } else {
    trend.passed = rho < 0.0;
    trend.detail = "spearman rho = " + format_number(rho);
  }
  report.checks.push_back(trend);
  report.statistics["optimal_loss"] = optimal;
  report.statistics["theorem2"] = bound;
  report.statistics["simplified_bound"] = simplified;
  report.statistics["simplified_bound_per_user"] = waiting_time_simplified(inputs, true);
  report.statistics["spearman_rho"] = std::isnan(rho) ? json(nullptr) : json(rho);
  return report;
}

/// Pooled (transfer learning) estimator vs target-only estimator at a fixed
/// small window, across numbers of source samples. Both estimators see the
/// same target logs in every trial.
inline Report run_tl_comparison(const ExperimentSpec& spec) {
  validate_spec(spec);
  Report report = detail::new_report(spec);
  const auto p = spec.profile.resolve(spec.network.N, "profile");
  const auto q = (spec.q_profile ? *spec.q_profile : spec.profile).resolve(spec.network.N, "q_profile");
  const double distance = sup_distance(p, q);
  const auto inputs = spec.bound_inputs();
  const auto target_bound = waiting_time_target(inputs);
  std::optional<SourceSampleRequirement> requirement;
  try {
    requirement = tl_min_source_samples(inputs, distance);
  } catch (const InfeasibleError&) {
  }
  const SolverOptions solver = detail::inner_solver(spec);
  const double optimal = optimize_strategy(p, spec.network, solver).objective;
  const std::size_t N = spec.network.N;

  // Target logs are shared by all m values.
  std::vector<CountVector> target(spec.trials);
  std::vector<detail::GapSample> target_samples(spec.trials);
  parallel_for(spec.trials, spec.workers, [&](std::size_t t) {
    Rng rng = make_stream(spec.seed, {0x544cULL, 0, t});
    target[t] = target_counts(generate_requests(p, spec.network, spec.tau, rng), N);
    if (target[t].total == 0) target_samples[t].no_sample = true;
    else target_samples[t].gap = detail::loss_gap(profile_from_counts(target[t]), p, spec.network, solver, optimal);
  });
  const auto target_summary = detail::GapSummary::of(target_samples);
  const double target_median = detail::quantile(target_summary.gaps, 0.5);

  report.columns = {"m", "tau", "distance", "trials", "tl_no_sample", "target_no_sample", "tl_gap_median",
                    "target_gap_median", "tl_gap_mean", "target_gap_mean", "tl_frac_gap_gt_epsilon",
                    "target_frac_gap_gt_epsilon", "bound_theorem3", "bound_theorem2", "m_min", "distance_ok"};
  Check dominance{"tl_median_gap_le_target_when_m_ge_m_min", true, false, ""};
  Check reduction{"m0_rows_match_target_only", true, false, ""};
  std::size_t dominance_rows = 0;
  bool saw_m0 = false;
  json per_m = json::array();

  for (std::size_t k = 0; k < spec.m_grid.size(); ++k) {
    const std::uint64_t m = spec.m_grid[k];
    std::vector<detail::GapSample> tl(spec.trials);
    parallel_for(spec.trials, spec.workers, [&](std::size_t t) {
      Rng rng = make_stream(spec.seed, {0x544cULL, 1, t, m});
      const auto source = source_counts(generate_source_samples(q, m, rng), N);
      if (target[t].total + source.total == 0) {
        tl[t].no_sample = true;
        return;
      }
      tl[t].gap = detail::loss_gap(tl_estimate(target[t], source), p, spec.network, solver, optimal);
    });
    const auto s = detail::GapSummary::of(tl);
    const double tl_median = detail::quantile(s.gaps, 0.5);

    std::string theorem3 = "infeasible";
    json theorem3_json = "infeasible";
    try {
      const auto b = waiting_time_tl(inputs, m, distance);
      theorem3 = format_number(b.value);
      theorem3_json = b;
    } catch (const InfeasibleError&) {
    }
    report.rows.push_back({format_number(m), format_number(spec.tau), format_number(distance),
                           format_number(spec.trials), format_number(s.no_sample),
                           format_number(target_summary.no_sample), format_number(tl_median),
                           format_number(target_median), format_number(detail::mean(s.gaps)),
                           format_number(detail::mean(target_summary.gaps)),
                           format_number(s.exceed_fraction(spec.epsilon, spec.trials)),
                           format_number(target_summary.exceed_fraction(spec.epsilon, spec.trials)), theorem3,
                           format_number(target_bound.value),
                           requirement ? format_number(requirement->m_min) : std::string("infeasible"),
                           requirement ? (requirement->distance_ok ? "true" : "false") : "false"});
    per_m.push_back({{"m", m}, {"theorem3", theorem3_json}});

    if (distance == 0.0 && requirement && m >= requirement->m_min) {
      ++dominance_rows;
      if (!(tl_median <= target_median)) {
        dominance.passed = false;
        dominance.detail += "m=" + std::to_string(m) + " tl median " + format_number(tl_median) + " > target " +
                            format_number(target_median) + "; ";
      }
    }
    if (m == 0) {
      saw_m0 = true;
      for (std::size_t t = 0; t < spec.trials; ++t) {
        const bool same = tl[t].no_sample == target_samples[t].no_sample &&
                          (tl[t].no_sample || tl[t].gap == target_samples[t].gap);
        if (!same) {
          reduction.passed = false;
          reduction.detail = "trial " + std::to_string(t) + " differs";
          break;
        }
      }
    }
  }
  if (dominance_rows == 0) {
    dominance.skipped = true;
    dominance.detail = "no row with distance = 0 and m >= m_min";
  } else if (dominance.passed) {
    dominance.detail = std::to_string(dominance_rows) + " qualifying rows";
  }
  if (!saw_m0) {
    reduction.skipped = true;
    reduction.detail = "m_grid has no 0 entry";
  }
  report.checks.push_back(dominance);
  report.checks.push_back(reduction);
  report.statistics["optimal_loss"] = optimal;
  report.statistics["distance"] = distance;
  report.statistics["theorem2"] = target_bound;
  report.statistics["theorem3"] = per_m;
  report.statistics["source_requirement"] = requirement ? json(*requirement) : json("infeasible");
  return report;
}

/// Optimal caching strategy against baselines and, for N <= 4, the lattice oracle.
inline Report run_optimize(const ExperimentSpec& spec) {
  validate_spec(spec);
  Report report = detail::new_report(spec);
  const auto p = spec.profile.resolve(spec.network.N, "profile");
  SolverOptions solver = spec.solver;
  solver.seed = derive_seed(spec.seed, {0x534f4cULL});
  solver.workers = spec.workers == 0 ? default_workers() : spec.workers;
  const auto best = optimize_strategy(p, spec.network, solver);

  report.columns = {"method", "objective", "excess_over_optimized", "strategy"};
  auto emit = [&](const std::string& name, const CachingStrategy& s, double objective) {
    report.rows.push_back({name, format_number(objective), format_number(objective - best.objective),
                           format_strategy(s)});
  };
  emit("optimized", best.strategy, best.objective);
  const auto uniform = uniform_strategy(spec.network.N);
  const double uniform_loss = offloading_loss(uniform, p, spec.network);
  emit("uniform", uniform, uniform_loss);
  const auto proportional = proportional_strategy(p);
  const double proportional_loss = offloading_loss(proportional, p, spec.network);
  emit("popularity_proportional", proportional, proportional_loss);

  report.checks.push_back({"optimized_le_uniform", best.objective <= uniform_loss, false, ""});
  report.checks.push_back({"optimized_le_proportional", best.objective <= proportional_loss, false, ""});
  if (spec.network.N <= kBruteForceMaxFiles) {
    const auto oracle = brute_force_optimum(p, spec.network, spec.solver.grid_resolution);
    emit("brute_force", oracle.strategy, oracle.objective);
    report.checks.push_back({"brute_force_ge_optimized_minus_1e-3", oracle.objective >= best.objective - 1e-3, false,
                             "grid objective " + format_number(oracle.objective)});
  }
  report.statistics["solver"] = best;
  return report;
}

/// Pure evaluation of every bound across the lambda_u grid.
inline Report run_bounds(const ExperimentSpec& spec) {
  validate_spec(spec);
  Report report = detail::new_report(spec);
  report.columns = {"lambda_u", "L", "theorem2_finite", "theorem2", "epsilon_bar", "g_star", "inner_log_argument",
                    "simplified", "simplified_per_user", "rho", "theorem3_finite", "theorem3", "epsilon_pq",
                    "Lambda", "F", "m_min", "distance_ok"};
  json records = json::array();
  for (double lu : spec.lambda_u_grid) {
    auto inputs = spec.bound_inputs();
    inputs.config.lambda_u = lu;
    json record{{"lambda_u", lu}};
    std::vector<std::string> row{format_number(lu)};
    const auto t2 = waiting_time_target(inputs);
    record["theorem2"] = t2;
    row.insert(row.end(), {format_number(t2.threshold), t2.finite ? "true" : "false", format_number(t2.value),
                           format_number(t2.epsilon_bar), format_number(t2.g_star),
                           format_number(t2.inner_log_argument)});
    const double simple = lu > 0.0 ? waiting_time_simplified(inputs, false) : std::numeric_limits<double>::infinity();
    const double simple_user = lu > 0.0 ? waiting_time_simplified(inputs, true) : std::numeric_limits<double>::infinity();
    record["simplified"] = number_or_infinite(simple);
    record["simplified_per_user"] = number_or_infinite(simple_user);
    row.insert(row.end(), {format_number(simple), format_number(simple_user)});
    std::vector<std::string> tail;
    try {
      const auto t3 = waiting_time_tl(inputs, spec.m, spec.distance);
      const auto req = tl_min_source_samples(inputs, spec.distance);
      record["theorem3"] = t3;
      record["source_requirement"] = req;
      tail = {format_number(t3.threshold), t3.finite ? "true" : "false", format_number(t3.value),
              format_number(t3.epsilon_pq), format_number(t3.Lambda), format_number(req.F),
              format_number(req.m_min), req.distance_ok ? "true" : "false"};
    } catch (const InfeasibleError&) {
      record["theorem3"] = "infeasible";
      tail.assign(8, "infeasible");
    }
    row.insert(row.end(), tail.begin(), tail.end());
    records.push_back(record);
    report.rows.push_back(std::move(row));
  }
  report.statistics["bounds"] = records;
  report.statistics["sup_g_sum"] = sup_g_sum(spec.network, spec.sup_mode);
  return report;
}

inline Report run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::validate_theorem1: return run_validate_theorem1(spec);
    case ExperimentKind::waiting_time_sweep: return run_waiting_time_sweep(spec);
    case ExperimentKind::tl_comparison: return run_tl_comparison(spec);
    case ExperimentKind::optimize: return run_optimize(spec);
    case ExperimentKind::bounds: return run_bounds(spec);
  }
  throw ConfigError("kind", "unknown experiment kind");
}

}  // namespace randcache
