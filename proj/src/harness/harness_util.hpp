#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "concal/harness/report.hpp"
#include "concal/io/config.hpp"
#include "concal/version.hpp"

namespace concal::harness {

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Effective config (with run options folded in) drives the provenance hash.
inline Config effective_config(Config config, const RunOptions& options) {
  config.set("experiment", "base_seed", std::to_string(options.seed));
  config.set("experiment", "trials", std::to_string(options.trials));
  return config;
}

inline RunReport make_report(const std::string& experiment, const Config& config,
                             const RunOptions& options) {
  RunReport report;
  report.experiment = experiment;
  report.version = kVersion;
  report.seed = options.seed;
  report.trials = options.trials;
  report.workers = options.workers;
  report.config_hash = hex64(effective_config(config, options).hash());
  return report;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// MC standard error over trials: sd/sqrt(n), sample sd with ddof=1.
inline double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline AggregateStat trial_mean_stat(const std::string& name, const std::string& column,
                                     const std::vector<double>& per_trial) {
  AggregateStat stat;
  stat.name = name;
  stat.column = column;
  stat.stat = "mean_of_trial_means";
  stat.value = mean(per_trial);
  stat.se = standard_error(per_trial);
  return stat;
}

inline TargetCheck target(const std::string& name, bool pass, const std::string& detail) {
  return {name, pass, detail};
}

}  // namespace concal::harness
