#include <cmath>
#include <set>
#include <string>

#include "concal/harness/experiments.hpp"

namespace concal {

namespace {

void check(std::vector<std::string>& issues, bool ok, const std::string& message) {
  if (!ok) issues.push_back(message);
}

void check_positive(std::vector<std::string>& issues, const Config& cfg,
                    const std::string& section, const std::string& key, double fallback) {
  const double v = cfg.get_f64(section, key, fallback);
  check(issues, v > 0.0, "[" + section + "] " + key + " must be > 0");
}

void check_unit_interval(std::vector<std::string>& issues, const Config& cfg,
                         const std::string& section, const std::string& key, double fallback) {
  const double v = cfg.get_f64(section, key, fallback);
  check(issues, v > 0.0 && v < 1.0, "[" + section + "] " + key + " must be in (0,1)");
}

void validate_power(const Config& cfg, std::vector<std::string>& issues) {
  const double alpha = cfg.get_f64("calibration", "alpha", 0.1);
  const double beta = cfg.get_f64("calibration", "beta", 0.05);
  const double x_max = cfg.get_f64("power", "x_max", 0.5);
  const double y_max = cfg.get_f64("channel", "y_max", 2.0);
  const double y_min = cfg.get_f64("channel", "y_min", 0.05);
  check_unit_interval(issues, cfg, "calibration", "alpha", alpha);
  check_unit_interval(issues, cfg, "calibration", "beta", beta);
  check(issues, x_max > 0.0, "[power] x_max must be > 0");
  check(issues, y_min > 0.0 && y_max > y_min, "[channel] need 0 < y_min < y_max");
  if (beta > 0.0 && beta < 1.0 && x_max > 0.0 && y_max > 0.0) {
    check(issues, beta < alpha / (x_max * y_max),
          "[calibration] beta too large for the interference budget: requires beta < "
          "alpha/(x_max*y_max)");
  }
  check(issues, cfg.get_i64("calibration", "m_samples", 100) >= 1,
        "[calibration] m_samples must be >= 1");
  check(issues, cfg.get_i64("calibration", "horizon", 16) >= 0,
        "[calibration] horizon must be >= 0");
  check(issues, cfg.get_i64("calibration", "calibration_episodes", 500) >= 1,
        "[calibration] calibration_episodes must be >= 1");
  check(issues, cfg.get_i64("calibration", "grid_points", 256) >= 2,
        "[calibration] grid_points must be >= 2");
  for (const char* key : {"p_stable_to_fade", "p_fade_to_stable"}) {
    const double p = cfg.get_f64("channel", key, 0.1);
    check(issues, p >= 0.0 && p <= 1.0, std::string("[channel] ") + key + " must be in [0,1]");
  }
}

void validate_hyperparam(const Config& cfg, std::vector<std::string>& issues) {
  const auto weights = cfg.has("scheduler", "fairness_weights")
                           ? cfg.get_f64_list("scheduler", "fairness_weights")
                           : std::vector<double>{0.5};
  check(issues, !weights.empty(), "[scheduler] fairness_weights must be non-empty");
  for (double w : weights)
    check(issues, w >= 0.0 && w <= 1.0, "[scheduler] fairness_weights entries must be in [0,1]");
  const auto powers = cfg.has("scheduler", "power_levels")
                          ? cfg.get_f64_list("scheduler", "power_levels")
                          : std::vector<double>{1.0};
  check(issues, !powers.empty(), "[scheduler] power_levels must be non-empty");
  for (double p : powers) check(issues, p > 0.0, "[scheduler] power_levels entries must be > 0");
  check(issues, cfg.get_f64("scheduler", "arrival_high", 0.35) >= 0.0,
        "[scheduler] arrival_high must be >= 0");
  check(issues, cfg.get_f64("scheduler", "arrival_low", 0.2) >= 0.0,
        "[scheduler] arrival_low must be >= 0");
  check_positive(issues, cfg, "scheduler", "latency_max", 20.0);
  check_unit_interval(issues, cfg, "testing", "beta", 0.1);
  check(issues, cfg.get_i64("testing", "budget", 1200) >= 0, "[testing] budget must be >= 0");
  const auto targets = cfg.has("testing", "latency_targets_slots")
                           ? cfg.get_f64_list("testing", "latency_targets_slots")
                           : std::vector<double>{4.0};
  check(issues, !targets.empty(), "[testing] latency_targets_slots must be non-empty");
  const double l_max = cfg.get_f64("scheduler", "latency_max", 20.0);
  for (double t : targets)
    check(issues, t > 0.0 && t < l_max,
          "[testing] latency targets must be in (0, latency_max)");
}

void validate_beam(const Config& cfg, std::vector<std::string>& issues) {
  const long k = cfg.get_i64("beam", "codebook_size", 16);
  const long bins = cfg.get_i64("beam", "num_bins", 8);
  check(issues, k >= 2, "[beam] codebook_size must be >= 2");
  check(issues, bins >= 1, "[beam] num_bins must be >= 1");
  check_positive(issues, cfg, "beam", "snr_floor", 0.05);
  check_positive(issues, cfg, "calibration", "eta", 0.1);
  const double alpha = cfg.get_f64("calibration", "alpha", 0.1);
  check(issues, alpha >= 0.0 && alpha < 1.0, "[calibration] alpha must be in [0,1)");
  check(issues, cfg.get_i64("calibration", "steps", 10000) >= 1,
        "[calibration] steps must be >= 1");
  for (const char* key : {"amplitudes", "noises", "lobe_widths"}) {
    if (cfg.has("beam", key)) {
      const auto values = cfg.get_f64_list("beam", key);
      check(issues, static_cast<long>(values.size()) == bins,
            std::string("[beam] ") + key + " must list one value per bin");
    }
  }
  const double decay = cfg.get_f64("beam", "ema_decay", 0.9);
  check(issues, decay > 0.0 && decay < 1.0, "[beam] ema_decay must be in (0,1)");
}

void validate_counterfactual(const Config& cfg, std::vector<std::string>& issues) {
  check(issues, cfg.get_i64("backlog", "num_ues", 4) >= 1, "[backlog] num_ues must be >= 1");
  check(issues, cfg.get_i64("backlog", "horizon", 40) >= 1, "[backlog] horizon must be >= 1");
  check_positive(issues, cfg, "backlog", "policy_temperature", 3.0);
  check_unit_interval(issues, cfg, "analysis", "beta", 0.1);
  check_positive(issues, cfg, "analysis", "clip", 50.0);
  check(issues, cfg.get_i64("analysis", "log_episodes", 8000) >= 1,
        "[analysis] log_episodes must be >= 1");
  check(issues, cfg.get_i64("analysis", "query_contexts", 2000) >= 1,
        "[analysis] query_contexts must be >= 1");
  const std::string action = cfg.get_str("analysis", "target_action", "rr");
  check(issues, action == "rr" || action == "pfca",
        "[analysis] target_action must be rr or pfca");
  const double heavy = cfg.get_f64("backlog", "heavy_probability", 0.5);
  check(issues, heavy >= 0.0 && heavy <= 1.0, "[backlog] heavy_probability must be in [0,1]");
}

}  // namespace

std::vector<std::string> validate_config(const Config& config) {
  std::vector<std::string> issues;
  if (!config.has("experiment", "name")) {
    issues.push_back("[experiment] name is required");
    return issues;
  }
  const std::string name = config.get_str("experiment", "name");
  const std::set<std::string> known = {"power_control", "hyperparam", "beam", "counterfactual"};
  if (known.count(name) == 0) {
    issues.push_back("[experiment] name must be one of power_control|hyperparam|beam|counterfactual");
    return issues;
  }
  check(issues, config.get_i64("experiment", "trials", 1) >= 1,
        "[experiment] trials must be >= 1");
  if (name == "power_control") validate_power(config, issues);
  if (name == "hyperparam") validate_hyperparam(config, issues);
  if (name == "beam") validate_beam(config, issues);
  if (name == "counterfactual") validate_counterfactual(config, issues);
  return issues;
}

}  // namespace concal
