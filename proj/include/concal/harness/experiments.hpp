#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "concal/harness/report.hpp"
#include "concal/io/config.hpp"

namespace concal {

struct RunOptions {
  std::uint64_t seed = 1;
  long trials = 1;
  int workers = 1;
  std::string out_dir;
};

// All violations, collected rather than fail-fast, so a config can be fixed
// in one pass. Empty result means the config is runnable.
std::vector<std::string> validate_config(const Config& config);

// Experiment runners. Each validates first, executes `trials` seeded
// replications (concurrently up to `workers`), writes trace.csv,
// aggregate.json and report.txt under out_dir, and returns the report.
RunReport run_power_control(const Config& config, const RunOptions& options);
RunReport run_hyperparam(const Config& config, const RunOptions& options);
RunReport run_beam(const Config& config, const RunOptions& options);
RunReport run_counterfactual(const Config& config, const RunOptions& options);

// Dispatch on [experiment] name.
RunReport run_experiment(const Config& config, const RunOptions& options);

// Execute fn(trial) for trial in [0, trials) across up to `workers` threads.
void run_trials(long trials, int workers, const std::function<void(long)>& fn);

}  // namespace concal
