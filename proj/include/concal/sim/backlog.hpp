#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "concal/common.hpp"
#include "concal/rng.hpp"

namespace concal::sim {

enum class SchedulingApp : int { kRoundRobin = 0, kProportionalFair = 1 };

// Queue-drain scenario: per-UE initial backlogs and i.i.d. per-slot channel
// rates; the scheduler serves one UE per slot and final residual backlogs are
// the KPIs. Episodes mix light and heavy initial loads so the logging policy
// is strongly context-dependent.
struct BacklogScenario {
  std::size_t num_ues = 4;
  std::size_t horizon = 40;
  double mean_rate_lo = 0.5, mean_rate_hi = 1.5;  // per-UE mean rate range
  double light_backlog_lo = 0.0, light_backlog_hi = 5.0;
  double heavy_backlog_lo = 10.0, heavy_backlog_hi = 25.0;
  double heavy_probability = 0.5;
  double policy_tau = 2.0;          // threshold on predicted max RR residual
  double policy_temperature = 3.0;  // softmax temperature
  double pf_decay = 0.99;           // PF throughput EMA decay

  void validate() const;
};

// Drawn episode: context (initial backlogs + per-UE mean rates) plus the
// realized rate matrix, shared by factual and counterfactual runs.
struct BacklogEpisode {
  std::vector<double> initial_backlog;  // num_ues
  std::vector<double> mean_rate;        // num_ues
  std::vector<double> rates;            // num_ues x horizon, row-major

  double rate(std::size_t ue, std::size_t t, std::size_t horizon) const {
    return rates[ue * horizon + t];
  }
  // context vector: initial backlogs followed by mean rates
  std::vector<double> context() const;
};

BacklogEpisode draw_backlog_episode(const BacklogScenario& scenario, Rng& rng);

// Run the scheduler over a drawn episode; RR serves UEs cyclically one per
// slot, PFCA serves argmax(instantaneous rate / EMA throughput) among UEs
// with positive backlog. Returns final per-UE backlogs.
std::vector<double> run_backlog_schedule(const BacklogScenario& scenario,
                                         const BacklogEpisode& episode, SchedulingApp app);

// Convenience wrapper drawing a fresh episode; deterministic given rng state.
std::vector<double> backlog_episode(const BacklogScenario& scenario, SchedulingApp app, Rng& rng);

// Deterministic predictor of per-UE RR residual backlogs:
//   max(0, b_u - (horizon/num_ues) * mean_rate_u)
std::vector<double> rr_residual_prediction(const BacklogScenario& scenario,
                                           std::span<const double> context);

// pi(RR | x) = sigmoid(-(s(x) - tau)/temperature) with s(x) the predicted max
// RR residual, clamped to [1e-6, 1-1e-6].
double rr_propensity(const BacklogScenario& scenario, std::span<const double> context);

// Sample an action from the logging policy; returns the action and the exact
// propensity pi(a|x) used to sample it.
std::pair<SchedulingApp, double> logging_policy(const BacklogScenario& scenario,
                                                std::span<const double> context, Rng& rng);

}  // namespace concal::sim
