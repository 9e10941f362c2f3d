#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "concal/harness/experiments.hpp"
#include "concal/online.hpp"
#include "concal/rng.hpp"
#include "concal/sim/beam.hpp"
#include "harness_util.hpp"

namespace concal {

namespace {

using harness::mean;

struct BeamSetup {
  sim::BeamEnvironment env;
  double ema_decay = 0.9;
  double alpha = 0.1;
  double eta = 0.1;
  double lambda_init = 1.0;
  long steps = 10000;
  StepSchedule schedule = StepSchedule::kConstant;
  std::vector<double> alpha_sweep;
};

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n > 1 ? lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1) : lo;
  return v;
}

BeamSetup load_setup(const Config& cfg) {
  BeamSetup s;
  s.env.codebook_size = static_cast<std::size_t>(cfg.get_i64("beam", "codebook_size", 16));
  s.env.num_bins = static_cast<std::size_t>(cfg.get_i64("beam", "num_bins", 8));
  s.env.snr_floor = cfg.get_f64("beam", "snr_floor", 0.05);
  s.env.p_move = cfg.get_f64("beam", "p_move", 0.25);
  if (cfg.has("beam", "amplitudes")) {
    s.env.bin_amplitude = cfg.get_f64_list("beam", "amplitudes");
  } else {
    s.env.bin_amplitude = {1.0, 2.5, 1.3, 2.2, 1.1, 2.4, 1.6, 2.0};
    s.env.bin_amplitude.resize(s.env.num_bins, 1.5);
  }
  s.env.bin_noise = cfg.has("beam", "noises") ? cfg.get_f64_list("beam", "noises")
                                              : linspace(0.05, 0.6, s.env.num_bins);
  s.env.bin_lobe_width = cfg.has("beam", "lobe_widths")
                             ? cfg.get_f64_list("beam", "lobe_widths")
                             : linspace(0.5, 1.2, s.env.num_bins);
  s.env.validate();
  s.ema_decay = cfg.get_f64("beam", "ema_decay", 0.9);
  s.alpha = cfg.get_f64("calibration", "alpha", 0.1);
  s.eta = cfg.get_f64("calibration", "eta", 0.1);
  s.lambda_init = cfg.get_f64("calibration", "lambda_init", 1.0);
  s.steps = cfg.get_i64("calibration", "steps", 10000);
  // eta_schedule = constant (default, exact telescoping) | inv_sqrt
  s.schedule = cfg.get_str("calibration", "eta_schedule", "constant") == "inv_sqrt"
                   ? StepSchedule::kInvSqrt
                   : StepSchedule::kConstant;
  s.alpha_sweep = cfg.has("calibration", "alpha_sweep")
                      ? cfg.get_f64_list("calibration", "alpha_sweep")
                      : std::vector<double>{0.05, 0.1, 0.15, 0.2};
  return s;
}

struct StepRow {
  long t = 0;
  long bin = 0;
  double risk_global = 0.0, risk_local = 0.0;
  double cum_risk_global = 0.0, cum_risk_local = 0.0;
  long set_global = 0, set_local = 0;
};

struct AlphaRunResult {
  double alpha = 0.0;
  double mean_risk_global = 0.0, mean_risk_local = 0.0;
  double mean_set_global = 0.0, mean_set_local = 0.0;
  std::vector<StepRow> rows;
};

// Global and localized run side by side on one shared environment
// realization; beam choice does not feed back into the environment, and the
// predictor consumes the full-codebook feedback either way.
AlphaRunResult run_alpha(const BeamSetup& s, double alpha, std::uint64_t seed, long trial,
                         std::size_t alpha_index, bool keep_rows) {
  Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(trial),
                        "beam.env.a" + std::to_string(alpha_index));
  sim::BeamPredictor predictor = sim::BeamPredictor::make(s.env, s.ema_decay);

  OnlineThreshold global;
  global.lambda = s.lambda_init;
  global.eta = s.eta;
  global.alpha = alpha;
  global.schedule = s.schedule;

  LocalizedThreshold local;
  local.phi = one_hot_bins(s.env.num_bins);
  local.theta.assign(s.env.num_bins, s.lambda_init);
  local.eta = s.eta;
  local.alpha = alpha;
  local.schedule = s.schedule;

  AlphaRunResult result;
  result.alpha = alpha;
  if (keep_rows) result.rows.reserve(static_cast<std::size_t>(s.steps));
  std::size_t location = 0;
  double cum_g = 0.0, cum_l = 0.0, set_g = 0.0, set_l = 0.0;
  for (long t = 0; t < s.steps; ++t) {
    const sim::BeamObservation obs = sim::beam_observe(s.env, location, rng);
    const std::vector<double> context = {static_cast<double>(obs.bin)};
    const std::span<const double> conf = predictor.confidences(obs.bin);

    const sim::BeamDecision dg = sim::beam_evaluate(conf, obs.snr, global.lambda);
    const sim::BeamDecision dl =
        sim::beam_evaluate(conf, obs.snr, locp_threshold(local, context));
    ocp_update(global, dg.risk);
    locp_update(local, context, dl.risk);
    predictor.update(obs.bin, obs.snr);

    cum_g += dg.risk;
    cum_l += dl.risk;
    set_g += static_cast<double>(dg.set_size);
    set_l += static_cast<double>(dl.set_size);
    if (keep_rows) {
      StepRow row;
      row.t = t;
      row.bin = static_cast<long>(obs.bin);
      row.risk_global = dg.risk;
      row.risk_local = dl.risk;
      row.cum_risk_global = cum_g / static_cast<double>(t + 1);
      row.cum_risk_local = cum_l / static_cast<double>(t + 1);
      row.set_global = static_cast<long>(dg.set_size);
      row.set_local = static_cast<long>(dl.set_size);
      result.rows.push_back(row);
    }
  }
  const double n = static_cast<double>(s.steps);
  result.mean_risk_global = cum_g / n;
  result.mean_risk_local = cum_l / n;
  result.mean_set_global = set_g / n;
  result.mean_set_local = set_l / n;
  return result;
}

struct TrialResult {
  std::vector<AlphaRunResult> runs;  // one per sweep alpha
};

}  // namespace

RunReport run_beam(const Config& config, const RunOptions& options) {
  const auto issues = validate_config(config);
  if (!issues.empty()) throw std::runtime_error("run_beam: invalid config: " + issues.front());
  const BeamSetup setup = load_setup(config);

  // primary alpha first in the sweep ordering, deduped
  std::vector<double> alphas = {setup.alpha};
  for (double a : setup.alpha_sweep)
    if (std::find(alphas.begin(), alphas.end(), a) == alphas.end()) alphas.push_back(a);

  std::vector<TrialResult> results(static_cast<std::size_t>(options.trials));
  run_trials(options.trials, options.workers, [&](long trial) {
    TrialResult& r = results[static_cast<std::size_t>(trial)];
    for (std::size_t ai = 0; ai < alphas.size(); ++ai)
      r.runs.push_back(run_alpha(setup, alphas[ai], options.seed, trial, ai, /*keep_rows=*/true));
  });

  CsvWriter trace("beam_trace v1",
                  {"trial", "alpha", "t", "bin", "risk_global", "risk_local", "cum_risk_global",
                   "cum_risk_local", "set_size_global", "set_size_local"});
  std::vector<double> risk_g, risk_l, size_g, size_l;  // per trial, primary alpha
  for (long trial = 0; trial < options.trials; ++trial) {
    const TrialResult& r = results[static_cast<std::size_t>(trial)];
    for (const AlphaRunResult& run : r.runs) {
      for (const StepRow& row : run.rows) {
        trace.row({fmt_i64(trial), fmt_f64(run.alpha), fmt_i64(row.t), fmt_i64(row.bin),
                   fmt_f64(row.risk_global), fmt_f64(row.risk_local),
                   fmt_f64(row.cum_risk_global), fmt_f64(row.cum_risk_local),
                   fmt_i64(row.set_global), fmt_i64(row.set_local)});
      }
    }
    risk_g.push_back(r.runs[0].mean_risk_global);
    risk_l.push_back(r.runs[0].mean_risk_local);
    size_g.push_back(r.runs[0].mean_set_global);
    size_l.push_back(r.runs[0].mean_set_local);
  }

  RunReport report = harness::make_report("beam", config, options);
  const std::string primary = fmt_f64(setup.alpha);
  auto primary_stat = [&](const std::string& name, const std::string& column,
                          const std::vector<double>& values) {
    AggregateStat stat = harness::trial_mean_stat(name, column, values);
    stat.filter_column = "alpha";
    stat.filter_value = primary;
    return stat;
  };
  report.aggregates.push_back(primary_stat("cumulative_risk_global", "risk_global", risk_g));
  report.aggregates.push_back(primary_stat("cumulative_risk_local", "risk_local", risk_l));
  report.aggregates.push_back(primary_stat("mean_set_size_global", "set_size_global", size_g));
  report.aggregates.push_back(primary_stat("mean_set_size_local", "set_size_local", size_l));
  // alpha sweep of final mean set sizes
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    std::vector<double> sg, sl;
    for (const TrialResult& r : results) {
      sg.push_back(r.runs[ai].mean_set_global);
      sl.push_back(r.runs[ai].mean_set_local);
    }
    const std::string tag = fmt_f64(alphas[ai]);
    AggregateStat g = harness::trial_mean_stat("sweep_set_size_global_alpha_" + tag,
                                               "set_size_global", sg);
    g.filter_column = "alpha";
    g.filter_value = tag;
    report.aggregates.push_back(g);
    AggregateStat l =
        harness::trial_mean_stat("sweep_set_size_local_alpha_" + tag, "set_size_local", sl);
    l.filter_column = "alpha";
    l.filter_value = tag;
    report.aggregates.push_back(l);
  }

  const double risk_tol = config.get_f64("targets", "risk_tolerance", 0.01);
  const double dev_g = std::abs(mean(risk_g) - setup.alpha);
  const double dev_l = std::abs(mean(risk_l) - setup.alpha);
  report.targets.push_back(harness::target(
      "cumulative_risk_global_at_alpha", dev_g <= risk_tol,
      "|" + fmt_f64(mean(risk_g)) + " - " + primary + "| = " + fmt_f64(dev_g) + " <= " +
          fmt_f64(risk_tol)));
  report.targets.push_back(harness::target(
      "cumulative_risk_local_at_alpha", dev_l <= risk_tol,
      "|" + fmt_f64(mean(risk_l)) + " - " + primary + "| = " + fmt_f64(dev_l) + " <= " +
          fmt_f64(risk_tol)));
  report.targets.push_back(harness::target(
      "localized_sets_smaller", mean(size_l) < mean(size_g),
      "localized mean set size " + fmt_f64(mean(size_l)) + " < global " + fmt_f64(mean(size_g))));

  if (!options.out_dir.empty()) write_run_outputs(options.out_dir, report, trace);
  return report;
}

}  // namespace concal
