#pragma once

#include "concal/common.hpp"
#include "concal/rng.hpp"

namespace concal::sim {

// Discrete-time two-class downlink scheduler. Per slot: Poisson arrivals per
// UE (pooled per class), cell capacity c0*log2(1 + power*h_t) with i.i.d.
// unit-mean exponential h_t, split between classes by fairness_weight
// (fraction to high priority), FIFO within class with fractional service
// credit carried while the queue is busy.
struct SchedulerConfig {
  double fairness_weight = 0.7;  // fraction of capacity to high priority
  double power_level = 1.0;
  int n_high = 2, n_low = 4;
  double arrival_high = 0.35, arrival_low = 0.20;  // packets per UE per slot
  double c0 = 2.0;
  int episode_slots = 200;
  double latency_max = 20.0;  // L_max, slots; normalizes latency to [0,1]

  enum class ArrivalModel { kPoisson, kFixed };
  enum class ChannelLaw { kExponential, kConstant };
  ArrivalModel arrival_model = ArrivalModel::kPoisson;
  ChannelLaw channel_law = ChannelLaw::kExponential;

  void validate() const;
};

struct SchedulerResult {
  double high_mean_latency_slots = 0.0;
  double low_mean_latency_slots = 0.0;
  double high_latency_loss = 0.0;  // clip(high latency / L_max, 0, 1)
  double energy_delay = 0.0;       // power_level * low mean latency
  bool unstable_high = false;      // arrival rate >= mean allocated capacity
  bool unstable_low = false;
};

SchedulerResult scheduler_episode(const SchedulerConfig& config, Rng& rng);

}  // namespace concal::sim
