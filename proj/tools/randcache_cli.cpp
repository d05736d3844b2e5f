// randcache: run caching experiments and write <out>/report.json and <out>/rows.csv.
//
// Exit status: 0 when every summary check passes, 1 when any check fails,
// 2 on a configuration error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "randcache/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> trials;
  std::optional<std::size_t> workers;
};

int run(randcache::ExperimentKind kind, const Flags& flags) {
  using namespace randcache;
  ExperimentSpec spec = flags.config.empty() ? default_spec(kind) : load_spec(kind, flags.config);
  if (flags.seed) spec.seed = *flags.seed;
  if (flags.out) spec.output_dir = *flags.out;
  if (flags.trials) spec.trials = *flags.trials;
  if (flags.workers) spec.workers = *flags.workers;

  const Report report = run_experiment(spec);
  report.write(spec.output_dir);
  for (const auto& c : report.checks)
    std::cout << (c.skipped ? "SKIP" : c.passed ? "PASS" : "FAIL") << ' ' << c.name
              << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  std::cout << "wrote " << (std::filesystem::path(spec.output_dir) / "report.json").string() << " and rows.csv\n";
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  using randcache::ExperimentKind;
  CLI::App app{"Randomized edge caching experiments"};
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<const char*, ExperimentKind>> commands{
      {"validate-theorem1", ExperimentKind::validate_theorem1},
      {"waiting-time", ExperimentKind::waiting_time_sweep},
      {"tl-compare", ExperimentKind::tl_comparison},
      {"optimize", ExperimentKind::optimize},
      {"bounds", ExperimentKind::bounds}};
  const std::vector<const char*> descriptions{
      "closed-form offloading loss vs Monte Carlo",
      "estimation loss gap across observation windows with waiting-time bounds",
      "pooled source+target estimator vs target-only estimator",
      "optimal random caching strategy vs baselines",
      "waiting-time bound evaluation over a lambda_u grid"};

  std::optional<ExperimentKind> chosen;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    auto* sub = app.add_subcommand(commands[k].first, descriptions[k]);
    sub->add_option("--config", flags.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--trials", flags.trials, "trials per row");
    sub->add_option("--workers", flags.workers, "worker threads (results do not depend on this)");
    sub->callback([&chosen, kind = commands[k].second] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(*chosen, flags);
  } catch (const randcache::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
