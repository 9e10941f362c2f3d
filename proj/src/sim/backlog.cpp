#include "concal/sim/backlog.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace concal::sim {

void BacklogScenario::validate() const {
  CONCAL_REQUIRE(num_ues >= 1, "BacklogScenario: need at least one UE");
  CONCAL_REQUIRE(horizon >= 1, "BacklogScenario: horizon must be >= 1");
  CONCAL_REQUIRE(mean_rate_lo > 0.0 && mean_rate_hi >= mean_rate_lo,
                 "BacklogScenario: bad mean rate range");
  CONCAL_REQUIRE(light_backlog_lo >= 0.0 && heavy_backlog_lo >= 0.0,
                 "BacklogScenario: backlogs must be nonnegative");
  CONCAL_REQUIRE(heavy_probability >= 0.0 && heavy_probability <= 1.0,
                 "BacklogScenario: heavy_probability must be in [0,1]");
  CONCAL_REQUIRE(policy_temperature > 0.0, "BacklogScenario: temperature must be positive");
  CONCAL_REQUIRE(pf_decay > 0.0 && pf_decay < 1.0, "BacklogScenario: pf_decay must be in (0,1)");
}

std::vector<double> BacklogEpisode::context() const {
  std::vector<double> ctx = initial_backlog;
  ctx.insert(ctx.end(), mean_rate.begin(), mean_rate.end());
  return ctx;
}

BacklogEpisode draw_backlog_episode(const BacklogScenario& scenario, Rng& rng) {
  scenario.validate();
  BacklogEpisode ep;
  const std::size_t u = scenario.num_ues;
  ep.mean_rate.resize(u);
  ep.initial_backlog.resize(u);
  for (std::size_t i = 0; i < u; ++i)
    ep.mean_rate[i] = rng.uniform(scenario.mean_rate_lo, scenario.mean_rate_hi);
  const bool heavy = rng.bernoulli(scenario.heavy_probability);
  const double lo = heavy ? scenario.heavy_backlog_lo : scenario.light_backlog_lo;
  const double hi = heavy ? scenario.heavy_backlog_hi : scenario.light_backlog_hi;
  for (std::size_t i = 0; i < u; ++i) ep.initial_backlog[i] = rng.uniform(lo, hi);
  ep.rates.resize(u * scenario.horizon);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t t = 0; t < scenario.horizon; ++t)
      ep.rates[i * scenario.horizon + t] = ep.mean_rate[i] * rng.exponential();
  return ep;
}

std::vector<double> run_backlog_schedule(const BacklogScenario& scenario,
                                         const BacklogEpisode& episode, SchedulingApp app) {
  const std::size_t u = scenario.num_ues;
  const std::size_t horizon = scenario.horizon;
  std::vector<double> backlog = episode.initial_backlog;
  std::vector<double> throughput_ema = episode.mean_rate;  // PF average, init at mean rate

  for (std::size_t t = 0; t < horizon; ++t) {
    std::size_t serve = u;  // u = nobody
    if (app == SchedulingApp::kRoundRobin) {
      serve = t % u;  // strict cyclic, channel-unaware
    } else {
      double best_metric = -1.0;
      for (std::size_t i = 0; i < u; ++i) {
        if (backlog[i] <= 0.0) continue;
        const double metric = episode.rate(i, t, horizon) / throughput_ema[i];
        if (metric > best_metric) {
          best_metric = metric;
          serve = i;
        }
      }
    }
    double served_rate = 0.0;
    if (serve < u) {
      served_rate = episode.rate(serve, t, horizon);
      backlog[serve] = std::max(0.0, backlog[serve] - served_rate);
    }
    for (std::size_t i = 0; i < u; ++i) {
      const double gained = i == serve ? served_rate : 0.0;
      throughput_ema[i] =
          scenario.pf_decay * throughput_ema[i] + (1.0 - scenario.pf_decay) * gained;
    }
  }
  return backlog;
}

std::vector<double> backlog_episode(const BacklogScenario& scenario, SchedulingApp app, Rng& rng) {
  const BacklogEpisode ep = draw_backlog_episode(scenario, rng);
  return run_backlog_schedule(scenario, ep, app);
}

std::vector<double> rr_residual_prediction(const BacklogScenario& scenario,
                                           std::span<const double> context) {
  const std::size_t u = scenario.num_ues;
  CONCAL_REQUIRE(context.size() == 2 * u, "rr_residual_prediction: bad context size");
  const double slots_per_ue =
      static_cast<double>(scenario.horizon) / static_cast<double>(u);
  std::vector<double> pred(u);
  for (std::size_t i = 0; i < u; ++i)
    pred[i] = std::max(0.0, context[i] - slots_per_ue * context[u + i]);
  return pred;
}

double rr_propensity(const BacklogScenario& scenario, std::span<const double> context) {
  const std::vector<double> pred = rr_residual_prediction(scenario, context);
  const double s = *std::max_element(pred.begin(), pred.end());
  const double z = (s - scenario.policy_tau) / scenario.policy_temperature;
  const double pi = 1.0 / (1.0 + std::exp(z));
  return std::clamp(pi, 1e-6, 1.0 - 1e-6);
}

std::pair<SchedulingApp, double> logging_policy(const BacklogScenario& scenario,
                                                std::span<const double> context, Rng& rng) {
  const double pi = rr_propensity(scenario, context);
  if (rng.bernoulli(pi)) return {SchedulingApp::kRoundRobin, pi};
  return {SchedulingApp::kProportionalFair, 1.0 - pi};
}

}  // namespace concal::sim
