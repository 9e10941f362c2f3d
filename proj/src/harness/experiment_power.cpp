#include <cmath>
#include <stdexcept>

#include "concal/conformal.hpp"
#include "concal/harness/experiments.hpp"
#include "concal/kernels.hpp"
#include "concal/rng.hpp"
#include "concal/sim/channel.hpp"
#include "harness_util.hpp"

namespace concal {

namespace {

using harness::mean;

struct PowerSetup {
  sim::ChannelParams channel;
  double alpha = 0.1;
  double beta = 0.05;
  double gamma = 0.0;
  double x_max = 0.5;
  std::size_t m_samples = 100;
  std::size_t horizon = 16;
  long calibration_episodes = 500;
  long coverage_episodes = 400;
  long deploy_episodes = 50;
  long burn_in = 50;
  std::vector<double> grid;
};

PowerSetup load_setup(const Config& cfg) {
  PowerSetup s;
  s.channel.stable_a = cfg.get_f64("channel", "stable_a", 0.9);
  s.channel.stable_b = cfg.get_f64("channel", "stable_b", 0.1);
  s.channel.stable_sigma = cfg.get_f64("channel", "stable_sigma", 0.03);
  s.channel.fade_a = cfg.get_f64("channel", "fade_a", 0.25);
  s.channel.fade_b = cfg.get_f64("channel", "fade_b", 0.02);
  s.channel.fade_sigma = cfg.get_f64("channel", "fade_sigma", 0.02);
  s.channel.p_stable_to_fade = cfg.get_f64("channel", "p_stable_to_fade", 0.06);
  s.channel.p_fade_to_stable = cfg.get_f64("channel", "p_fade_to_stable", 0.12);
  s.channel.y_min = cfg.get_f64("channel", "y_min", 0.05);
  s.channel.y_max = cfg.get_f64("channel", "y_max", 2.0);
  s.channel.validate();
  s.alpha = cfg.get_f64("calibration", "alpha", 0.1);
  s.beta = cfg.get_f64("calibration", "beta", 0.05);
  s.x_max = cfg.get_f64("power", "x_max", 0.5);
  s.gamma = sim::choose_beta_gamma(s.alpha, s.beta, s.x_max, s.channel.y_max);
  s.m_samples = static_cast<std::size_t>(cfg.get_i64("calibration", "m_samples", 100));
  s.horizon = static_cast<std::size_t>(cfg.get_i64("calibration", "horizon", 16));
  s.calibration_episodes = cfg.get_i64("calibration", "calibration_episodes", 500);
  s.coverage_episodes = cfg.get_i64("calibration", "coverage_episodes", 400);
  s.deploy_episodes = cfg.get_i64("calibration", "deploy_episodes", 50);
  s.burn_in = cfg.get_i64("calibration", "burn_in", 50);
  const auto points = static_cast<std::size_t>(cfg.get_i64("calibration", "grid_points", 256));
  s.grid.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    s.grid[i] = s.channel.y_min + (s.channel.y_max - s.channel.y_min) * static_cast<double>(i) /
                                      static_cast<double>(points - 1);
  }
  return s;
}

struct Episode {
  std::vector<std::vector<double>> samples;  // predictor rollouts, m x horizon
  std::vector<double> mean_trajectory;       // single-point prediction
  std::vector<double> truth;
};

Episode draw_episode(const PowerSetup& s, Rng& rng) {
  sim::ChannelState state;
  for (long t = 0; t < s.burn_in; ++t) state = sim::channel_step(s.channel, state, rng);
  Episode ep;
  ep.samples = sim::trajectory_sampler(s.channel, state, s.horizon, s.m_samples, rng);
  ep.truth = sim::channel_sample_trajectory(s.channel, state, s.horizon, rng);
  ep.mean_trajectory.assign(s.horizon, 0.0);
  for (const auto& sample : ep.samples)
    for (std::size_t t = 0; t < s.horizon; ++t) ep.mean_trajectory[t] += sample[t];
  for (double& v : ep.mean_trajectory) v /= static_cast<double>(s.m_samples);
  return ep;
}

double nonconformity_unimodal(const Episode& ep) {
  return -score_neg_squared(ep.truth, ep.mean_trajectory);
}

double nonconformity_multisample(const Episode& ep) {
  return -score_multi_sample(ep.truth, ep.samples);
}

struct StepRecord {
  double true_gain = 0.0;
  double power_uni = 0.0, power_multi = 0.0;
  long set_size_uni = 0, set_size_multi = 0;
  long intervals_uni = 0, intervals_multi = 0;
  double interference_uni = 0.0, interference_multi = 0.0;
};

struct TrialResult {
  double coverage_uni = 0.0, coverage_multi = 0.0;
  std::vector<std::vector<StepRecord>> episodes;  // deploy episodes x horizon
};

TrialResult run_trial(const PowerSetup& s, std::uint64_t seed, long trial) {
  if (s.horizon == 0) {
    // zero-horizon run: nothing to predict, coverage vacuous
    TrialResult empty;
    empty.coverage_uni = empty.coverage_multi = 1.0;
    return empty;
  }
  Rng cal_rng = Rng::stream(seed, static_cast<std::uint64_t>(trial), "power.calibration");
  Rng cov_rng = Rng::stream(seed, static_cast<std::uint64_t>(trial), "power.coverage");
  Rng dep_rng = Rng::stream(seed, static_cast<std::uint64_t>(trial), "power.deploy");

  CalibrationSet cal_uni, cal_multi;
  for (long i = 0; i < s.calibration_episodes; ++i) {
    const Episode ep = draw_episode(s, cal_rng);
    cal_uni.nonconformity_scores.push_back(nonconformity_unimodal(ep));
    cal_multi.nonconformity_scores.push_back(nonconformity_multisample(ep));
  }
  const CoverageTarget target{s.beta};
  const ConformalThreshold lam_uni = conformal_threshold(cal_uni, target);
  const ConformalThreshold lam_multi = conformal_threshold(cal_multi, target);

  TrialResult result;
  long covered_uni = 0, covered_multi = 0;
  for (long i = 0; i < s.coverage_episodes; ++i) {
    const Episode ep = draw_episode(s, cov_rng);
    covered_uni +=
        lam_uni.is_include_all() || nonconformity_unimodal(ep) <= lam_uni.value;
    covered_multi +=
        lam_multi.is_include_all() || nonconformity_multisample(ep) <= lam_multi.value;
  }
  result.coverage_uni = static_cast<double>(covered_uni) / s.coverage_episodes;
  result.coverage_multi = static_cast<double>(covered_multi) / s.coverage_episodes;

  std::vector<double> conf(s.grid.size());
  std::vector<double> sample_col(s.m_samples);
  for (long e = 0; e < s.deploy_episodes; ++e) {
    const Episode ep = draw_episode(s, dep_rng);
    std::vector<StepRecord> steps(s.horizon);
    for (std::size_t t = 0; t < s.horizon; ++t) {
      StepRecord& rec = steps[t];
      rec.true_gain = ep.truth[t];

      kernels::neg_sq_score(s.grid.data(), s.grid.size(), ep.mean_trajectory[t], conf.data());
      const PredictionSet set_uni =
          build_prediction_set(s.grid, conf, lam_uni.confidence_threshold());
      rec.set_size_uni = static_cast<long>(set_uni.count_included);
      rec.intervals_uni = static_cast<long>(set_to_intervals(set_uni).size());
      rec.power_uni = sim::power_from_set(s.gamma, set_uni, s.channel.y_max, s.x_max);
      rec.interference_uni = sim::interference(rec.power_uni, ep.truth[t]);

      for (std::size_t m = 0; m < s.m_samples; ++m) sample_col[m] = ep.samples[m][t];
      kernels::min_sq_dist_score(s.grid.data(), s.grid.size(), sample_col.data(),
                                 sample_col.size(), conf.data());
      const PredictionSet set_multi =
          build_prediction_set(s.grid, conf, lam_multi.confidence_threshold());
      rec.set_size_multi = static_cast<long>(set_multi.count_included);
      rec.intervals_multi = static_cast<long>(set_to_intervals(set_multi).size());
      rec.power_multi = sim::power_from_set(s.gamma, set_multi, s.channel.y_max, s.x_max);
      rec.interference_multi = sim::interference(rec.power_multi, ep.truth[t]);
    }
    result.episodes.push_back(std::move(steps));
  }
  return result;
}

}  // namespace

RunReport run_power_control(const Config& config, const RunOptions& options) {
  const auto issues = validate_config(config);
  if (!issues.empty())
    throw std::runtime_error("run_power_control: invalid config: " + issues.front());
  const PowerSetup setup = load_setup(config);

  std::vector<TrialResult> results(static_cast<std::size_t>(options.trials));
  run_trials(options.trials, options.workers, [&](long trial) {
    results[static_cast<std::size_t>(trial)] = run_trial(setup, options.seed, trial);
  });

  CsvWriter trace("power_control_trace v1",
                  {"trial", "episode", "t", "true_gain", "power_unimodal", "power_multisample",
                   "set_size_unimodal", "set_size_multisample", "num_intervals_unimodal",
                   "num_intervals_multisample", "interference_unimodal",
                   "interference_multisample", "coverage_unimodal_trial",
                   "coverage_multisample_trial"});
  std::vector<double> cov_uni, cov_multi, pow_uni, pow_multi, intf_uni, intf_multi;
  for (long trial = 0; trial < options.trials; ++trial) {
    const TrialResult& r = results[static_cast<std::size_t>(trial)];
    cov_uni.push_back(r.coverage_uni);
    cov_multi.push_back(r.coverage_multi);
    double pu = 0.0, pm = 0.0, iu = 0.0, im = 0.0;
    long n = 0;
    for (std::size_t e = 0; e < r.episodes.size(); ++e) {
      for (std::size_t t = 0; t < r.episodes[e].size(); ++t) {
        const StepRecord& rec = r.episodes[e][t];
        trace.row({fmt_i64(trial), fmt_i64(static_cast<long>(e)), fmt_i64(static_cast<long>(t)),
                   fmt_f64(rec.true_gain), fmt_f64(rec.power_uni), fmt_f64(rec.power_multi),
                   fmt_i64(rec.set_size_uni), fmt_i64(rec.set_size_multi),
                   fmt_i64(rec.intervals_uni), fmt_i64(rec.intervals_multi),
                   fmt_f64(rec.interference_uni), fmt_f64(rec.interference_multi),
                   fmt_f64(r.coverage_uni), fmt_f64(r.coverage_multi)});
        pu += rec.power_uni;
        pm += rec.power_multi;
        iu += rec.interference_uni;
        im += rec.interference_multi;
        ++n;
      }
    }
    if (n > 0) {
      pow_uni.push_back(pu / n);
      pow_multi.push_back(pm / n);
      intf_uni.push_back(iu / n);
      intf_multi.push_back(im / n);
    }
  }

  RunReport report = harness::make_report("power_control", config, options);
  report.aggregates.push_back(
      harness::trial_mean_stat("coverage_unimodal", "coverage_unimodal_trial", cov_uni));
  report.aggregates.push_back(
      harness::trial_mean_stat("coverage_multisample", "coverage_multisample_trial", cov_multi));
  report.aggregates.push_back(
      harness::trial_mean_stat("mean_power_unimodal", "power_unimodal", pow_uni));
  report.aggregates.push_back(
      harness::trial_mean_stat("mean_power_multisample", "power_multisample", pow_multi));
  report.aggregates.push_back(
      harness::trial_mean_stat("mean_interference_unimodal", "interference_unimodal", intf_uni));
  report.aggregates.push_back(harness::trial_mean_stat("mean_interference_multisample",
                                                       "interference_multisample", intf_multi));

  const double cov_gap_tol = config.get_f64("targets", "coverage_match_tolerance", 0.01);
  const double ratio_min = config.get_f64("targets", "power_ratio_min", 1.1);
  const double cov_gap = std::abs(mean(cov_uni) - mean(cov_multi));
  report.targets.push_back(harness::target(
      "coverage_match", cov_gap <= cov_gap_tol,
      "|" + fmt_f64(mean(cov_uni)) + " - " + fmt_f64(mean(cov_multi)) + "| = " +
          fmt_f64(cov_gap) + " <= " + fmt_f64(cov_gap_tol)));
  const double ratio = mean(pow_uni) > 0.0 ? mean(pow_multi) / mean(pow_uni) : 0.0;
  report.targets.push_back(harness::target(
      "power_ratio_min", ratio >= ratio_min,
      "multi/uni power ratio " + fmt_f64(ratio) + " >= " + fmt_f64(ratio_min)));
  for (const auto* side : {"unimodal", "multisample"}) {
    const bool is_uni = std::string(side) == "unimodal";
    const auto& intf = is_uni ? intf_uni : intf_multi;
    const double budget = setup.alpha + 2.0 * harness::standard_error(intf);
    report.targets.push_back(harness::target(
        std::string("interference_budget_") + side, mean(intf) <= budget,
        "mean interference " + fmt_f64(mean(intf)) + " <= alpha + 2se = " + fmt_f64(budget)));
  }

  if (!options.out_dir.empty()) write_run_outputs(options.out_dir, report, trace);
  return report;
}

}  // namespace concal
