#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "concal/harness/experiments.hpp"
#include "concal/kernels.hpp"
#include "concal/version.hpp"

namespace {

// exit codes: 0 success, 1 config error, 2 runtime failure, 3 target miss
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kTargetMiss = 3;

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  long trials = 0;
  bool trials_given = false;
  int workers = 1;
};

int run_subcommand(const std::string& name, const CliArgs& args) {
  concal::Config config;
  try {
    config = concal::Config::load_file(args.config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (config.get_str("experiment", "name", "") != name) {
    std::cerr << "config error: [experiment] name does not match subcommand '" << name << "'\n";
    return kConfigError;
  }
  const auto issues = concal::validate_config(config);
  if (!issues.empty()) {
    std::cerr << "config validation failed (" << issues.size() << " issue"
              << (issues.size() == 1 ? "" : "s") << "):\n";
    for (const auto& issue : issues) std::cerr << "  - " << issue << '\n';
    return kConfigError;
  }

  concal::RunOptions options;
  options.seed = args.seed_given
                     ? args.seed
                     : static_cast<std::uint64_t>(config.get_i64("experiment", "base_seed", 1));
  options.trials = args.trials_given ? args.trials : config.get_i64("experiment", "trials", 1);
  options.workers = args.workers;
  options.out_dir = args.out_dir;

  try {
    const concal::RunReport report = concal::run_experiment(config, options);
    std::cout << concal::report_text(report);
    std::cout << "outputs: " << options.out_dir << "/{trace.csv,aggregate.json,report.txt}\n";
    return report.all_targets_pass() ? kOk : kTargetMiss;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int run_validate(const std::string& config_path) {
  concal::Config config;
  try {
    config = concal::Config::load_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto issues = concal::validate_config(config);
  if (issues.empty()) {
    std::cout << "config ok\n";
    return kOk;
  }
  std::cerr << "config validation failed (" << issues.size() << " issue"
            << (issues.size() == 1 ? "" : "s") << "):\n";
  for (const auto& issue : issues) std::cerr << "  - " << issue << '\n';
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal-cal: conformal calibration toolkit and simulation harness"};
  app.set_version_flag("--version", std::string("conformal-cal ") + concal::kVersion +
                                        " (kernels: " + concal::kernels::active_backend() + ")");
  app.require_subcommand(1);

  CliArgs args;
  std::string validate_path;

  const std::vector<std::string> experiments = {"power_control", "hyperparam", "beam",
                                                "counterfactual"};
  for (const auto& name : experiments) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", args.config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out_dir, "output directory")->required();
    sub->add_option("--seed", args.seed, "base seed (overrides config)")
        ->each([&args](const std::string&) { args.seed_given = true; });
    sub->add_option("--trials", args.trials, "Monte-Carlo trial count (overrides config)")
        ->each([&args](const std::string&) { args.trials_given = true; });
    sub->add_option("--workers", args.workers, "concurrent trial workers")
        ->check(CLI::PositiveNumber);
  }
  CLI::App* validate = app.add_subcommand("validate", "validate a config and exit");
  validate->add_option("--config", validate_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return run_validate(validate_path);
  for (const auto& name : experiments) {
    if (app.get_subcommand(name)->parsed()) return run_subcommand(name, args);
  }
  return kConfigError;
}
