#include <cmath>
#include <stdexcept>

#include "concal/counterfactual.hpp"
#include "concal/harness/experiments.hpp"
#include "concal/rng.hpp"
#include "concal/sim/backlog.hpp"
#include "harness_util.hpp"

namespace concal {

namespace {

using harness::mean;
using sim::SchedulingApp;

struct CounterfactualSetup {
  sim::BacklogScenario scenario;
  double beta = 0.1;
  double clip = 50.0;
  long log_episodes = 8000;
  long query_contexts = 2000;
  SchedulingApp target_action = SchedulingApp::kRoundRobin;
  std::pair<double, double> kpi_range = {0.0, 25.0};
};

CounterfactualSetup load_setup(const Config& cfg) {
  CounterfactualSetup s;
  s.scenario.num_ues = static_cast<std::size_t>(cfg.get_i64("backlog", "num_ues", 4));
  s.scenario.horizon = static_cast<std::size_t>(cfg.get_i64("backlog", "horizon", 40));
  s.scenario.mean_rate_lo = cfg.get_f64("backlog", "mean_rate_lo", 0.5);
  s.scenario.mean_rate_hi = cfg.get_f64("backlog", "mean_rate_hi", 1.5);
  s.scenario.light_backlog_lo = cfg.get_f64("backlog", "light_backlog_lo", 0.0);
  s.scenario.light_backlog_hi = cfg.get_f64("backlog", "light_backlog_hi", 5.0);
  s.scenario.heavy_backlog_lo = cfg.get_f64("backlog", "heavy_backlog_lo", 10.0);
  s.scenario.heavy_backlog_hi = cfg.get_f64("backlog", "heavy_backlog_hi", 25.0);
  s.scenario.heavy_probability = cfg.get_f64("backlog", "heavy_probability", 0.5);
  s.scenario.policy_tau = cfg.get_f64("backlog", "policy_tau", 2.0);
  s.scenario.policy_temperature = cfg.get_f64("backlog", "policy_temperature", 3.0);
  s.scenario.pf_decay = cfg.get_f64("backlog", "pf_decay", 0.99);
  s.scenario.validate();
  s.beta = cfg.get_f64("analysis", "beta", 0.1);
  s.clip = cfg.get_f64("analysis", "clip", 50.0);
  s.log_episodes = cfg.get_i64("analysis", "log_episodes", 8000);
  s.query_contexts = cfg.get_i64("analysis", "query_contexts", 2000);
  s.target_action = cfg.get_str("analysis", "target_action", "rr") == "pfca"
                        ? SchedulingApp::kProportionalFair
                        : SchedulingApp::kRoundRobin;
  s.kpi_range = {cfg.get_f64("analysis", "kpi_range_lo", 0.0),
                 cfg.get_f64("analysis", "kpi_range_hi", s.scenario.heavy_backlog_hi)};
  return s;
}

struct QueryRow {
  long query = 0;
  long ue = 0;
  double truth = 0.0, prediction = 0.0;
  double naive_lo = 0.0, naive_hi = 0.0;
  double cf_lo = 0.0, cf_hi = 0.0;
  int covered_naive = 0, covered_cf = 0;
  double pi_target = 0.0;
};

struct TrialResult {
  std::vector<QueryRow> rows;
};

double pi_of_action(const sim::BacklogScenario& scenario, std::span<const double> context,
                    SchedulingApp action) {
  const double pi_rr = sim::rr_propensity(scenario, context);
  return action == SchedulingApp::kRoundRobin ? pi_rr : 1.0 - pi_rr;
}

TrialResult run_trial(const CounterfactualSetup& s, std::uint64_t seed, long trial) {
  Rng log_rng = Rng::stream(seed, static_cast<std::uint64_t>(trial), "cf.log");
  Rng query_rng = Rng::stream(seed, static_cast<std::uint64_t>(trial), "cf.query");
  const std::size_t ues = s.scenario.num_ues;
  const SchedulingApp other = s.target_action == SchedulingApp::kRoundRobin
                                  ? SchedulingApp::kProportionalFair
                                  : SchedulingApp::kRoundRobin;

  // logged deployment phase: policy-sampled actions, factual KPIs, one log
  // per UE sharing context/action/propensity
  std::vector<std::vector<LoggedEpisode>> logs(ues);
  for (long i = 0; i < s.log_episodes; ++i) {
    const sim::BacklogEpisode ep = sim::draw_backlog_episode(s.scenario, log_rng);
    const std::vector<double> context = ep.context();
    const auto [action, sampled_pi] = sim::logging_policy(s.scenario, context, log_rng);
    const std::vector<double> kpis = sim::run_backlog_schedule(s.scenario, ep, action);
    const double pi_target = pi_of_action(s.scenario, context, s.target_action);
    for (std::size_t u = 0; u < ues; ++u) {
      LoggedEpisode logged;
      logged.context = context;
      logged.action = static_cast<int>(action);
      logged.kpi = kpis[u];
      // propensity of the logged action at this context
      logged.propensity = action == s.target_action ? pi_target : 1.0 - pi_target;
      logs[u].push_back(std::move(logged));
    }
  }

  // per-UE calibration sets over target-action episodes, presorted once and
  // reused across queries (same math as counterfactual_interval /
  // naive_interval; the equivalence is pinned by a unit test)
  std::vector<SortedWeightedCalib> weighted_calib(ues), unit_calib(ues);
  std::vector<ConformalThreshold> naive_lambda(ues);
  for (std::size_t u = 0; u < ues; ++u) {
    WeightedCalibSet wcal, ucal;
    for (const LoggedEpisode& logged : logs[u]) {
      if (logged.action != static_cast<int>(s.target_action)) continue;
      const double pred = sim::rr_residual_prediction(s.scenario, logged.context)[u];
      const double score = std::abs(logged.kpi - pred);
      wcal.nonconformity_scores.push_back(score);
      wcal.weights.push_back(counterfactual_weight(logged.propensity, s.clip));
      ucal.nonconformity_scores.push_back(score);
      ucal.weights.push_back(1.0);
    }
    if (wcal.nonconformity_scores.empty())
      throw InsufficientData("run_counterfactual: no logged episodes with the target action");
    weighted_calib[u] = SortedWeightedCalib::from(wcal);
    unit_calib[u] = SortedWeightedCalib::from(ucal);
    naive_lambda[u] = weighted_threshold_presorted(unit_calib[u], 1.0, s.beta);
  }

  TrialResult result;
  long accepted = 0;
  while (accepted < s.query_contexts) {
    const sim::BacklogEpisode ep = sim::draw_backlog_episode(s.scenario, query_rng);
    const std::vector<double> context = ep.context();
    const auto [action, sampled_pi] = sim::logging_policy(s.scenario, context, query_rng);
    if (action != other) continue;  // target population: the other app ran here
    // counterfactual ground truth: rerun the same channel draws under the
    // target app
    const std::vector<double> truth = sim::run_backlog_schedule(s.scenario, ep, s.target_action);
    const std::vector<double> rr_pred = sim::rr_residual_prediction(s.scenario, context);
    const double pi_target = pi_of_action(s.scenario, context, s.target_action);
    const double test_weight = counterfactual_weight(pi_target, s.clip);
    for (std::size_t u = 0; u < ues; ++u) {
      const ConformalThreshold cf_lambda =
          weighted_threshold_presorted(weighted_calib[u], test_weight, s.beta);
      auto to_interval = [&](const ConformalThreshold& lambda) {
        if (lambda.is_include_all()) return KpiInterval{s.kpi_range.first, s.kpi_range.second, true};
        return KpiInterval{rr_pred[u] - lambda.value, rr_pred[u] + lambda.value, false};
      };
      const KpiInterval naive = to_interval(naive_lambda[u]);
      const KpiInterval weighted = to_interval(cf_lambda);
      QueryRow row;
      row.query = accepted;
      row.ue = static_cast<long>(u);
      row.truth = truth[u];
      row.prediction = rr_pred[u];
      row.naive_lo = naive.lo;
      row.naive_hi = naive.hi;
      row.cf_lo = weighted.lo;
      row.cf_hi = weighted.hi;
      row.covered_naive = (truth[u] >= naive.lo && truth[u] <= naive.hi) ? 1 : 0;
      row.covered_cf = (truth[u] >= weighted.lo && truth[u] <= weighted.hi) ? 1 : 0;
      row.pi_target = pi_target;
      result.rows.push_back(std::move(row));
    }
    ++accepted;
  }
  return result;
}

}  // namespace

RunReport run_counterfactual(const Config& config, const RunOptions& options) {
  const auto issues = validate_config(config);
  if (!issues.empty())
    throw std::runtime_error("run_counterfactual: invalid config: " + issues.front());
  const CounterfactualSetup setup = load_setup(config);

  std::vector<TrialResult> results(static_cast<std::size_t>(options.trials));
  run_trials(options.trials, options.workers, [&](long trial) {
    results[static_cast<std::size_t>(trial)] = run_trial(setup, options.seed, trial);
  });

  CsvWriter trace("counterfactual_trace v1",
                  {"trial", "query", "ue", "truth", "prediction", "naive_lo", "naive_hi",
                   "naive_width", "cf_lo", "cf_hi", "cf_width", "covered_naive", "covered_cf",
                   "pi_target"});
  std::vector<double> cov_naive, cov_cf, width_naive, width_cf;
  for (long trial = 0; trial < options.trials; ++trial) {
    const TrialResult& r = results[static_cast<std::size_t>(trial)];
    double cn = 0.0, cc = 0.0, wn = 0.0, wc = 0.0;
    for (const QueryRow& row : r.rows) {
      const double nw = row.naive_hi - row.naive_lo;
      const double cw = row.cf_hi - row.cf_lo;
      trace.row({fmt_i64(trial), fmt_i64(row.query), fmt_i64(row.ue), fmt_f64(row.truth),
                 fmt_f64(row.prediction), fmt_f64(row.naive_lo), fmt_f64(row.naive_hi),
                 fmt_f64(nw), fmt_f64(row.cf_lo), fmt_f64(row.cf_hi), fmt_f64(cw),
                 fmt_i64(row.covered_naive), fmt_i64(row.covered_cf), fmt_f64(row.pi_target)});
      cn += row.covered_naive;
      cc += row.covered_cf;
      wn += nw;
      wc += cw;
    }
    const double n = static_cast<double>(r.rows.size());
    cov_naive.push_back(cn / n);
    cov_cf.push_back(cc / n);
    width_naive.push_back(wn / n);
    width_cf.push_back(wc / n);
  }

  RunReport report = harness::make_report("counterfactual", config, options);
  report.aggregates.push_back(
      harness::trial_mean_stat("coverage_naive", "covered_naive", cov_naive));
  report.aggregates.push_back(
      harness::trial_mean_stat("coverage_counterfactual", "covered_cf", cov_cf));
  report.aggregates.push_back(
      harness::trial_mean_stat("mean_width_naive", "naive_width", width_naive));
  report.aggregates.push_back(
      harness::trial_mean_stat("mean_width_counterfactual", "cf_width", width_cf));

  const double cf_min =
      config.get_f64("targets", "weighted_coverage_min", 1.0 - setup.beta - 0.015);
  const double naive_max = config.get_f64("targets", "naive_coverage_max", 0.88);
  report.targets.push_back(harness::target(
      "weighted_coverage", mean(cov_cf) >= cf_min,
      "counterfactual coverage " + fmt_f64(mean(cov_cf)) + " >= " + fmt_f64(cf_min)));
  report.targets.push_back(harness::target(
      "naive_coverage_fails", mean(cov_naive) <= naive_max,
      "naive coverage " + fmt_f64(mean(cov_naive)) + " <= " + fmt_f64(naive_max)));

  if (!options.out_dir.empty()) write_run_outputs(options.out_dir, report, trace);
  return report;
}

}  // namespace concal
