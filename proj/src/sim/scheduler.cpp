#include "concal/sim/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace concal::sim {

void SchedulerConfig::validate() const {
  CONCAL_REQUIRE(fairness_weight >= 0.0 && fairness_weight <= 1.0,
                 "SchedulerConfig: fairness_weight must be in [0,1]");
  CONCAL_REQUIRE(power_level > 0.0, "SchedulerConfig: power_level must be positive");
  CONCAL_REQUIRE(n_high >= 0 && n_low >= 0, "SchedulerConfig: negative UE count");
  CONCAL_REQUIRE(arrival_high >= 0.0 && arrival_low >= 0.0,
                 "SchedulerConfig: arrival rates must be nonnegative");
  CONCAL_REQUIRE(c0 > 0.0, "SchedulerConfig: c0 must be positive");
  CONCAL_REQUIRE(episode_slots >= 0, "SchedulerConfig: negative episode length");
  CONCAL_REQUIRE(latency_max > 0.0, "SchedulerConfig: latency_max must be positive");
}

SchedulerResult scheduler_episode(const SchedulerConfig& config, Rng& rng) {
  config.validate();

  // pooled per-class arrivals (Poisson superposition over UEs)
  const double rate[2] = {config.arrival_high * config.n_high,
                          config.arrival_low * config.n_low};
  std::deque<int> queue[2];         // arrival slot per packet, FIFO
  double credit[2] = {0.0, 0.0};    // fractional service carry
  double latency_sum[2] = {0.0, 0.0};
  long served[2] = {0, 0};
  const double share[2] = {config.fairness_weight, 1.0 - config.fairness_weight};
  double capacity_sum = 0.0;

  for (int t = 0; t < config.episode_slots; ++t) {
    for (int c = 0; c < 2; ++c) {
      int arrivals = 0;
      if (config.arrival_model == SchedulerConfig::ArrivalModel::kPoisson) {
        arrivals = rng.poisson(rate[c]);
      } else {
        arrivals = static_cast<int>(rate[c]);  // fixed integer arrivals per slot
      }
      for (int a = 0; a < arrivals; ++a) queue[c].push_back(t);
    }
    const double h = config.channel_law == SchedulerConfig::ChannelLaw::kExponential
                         ? rng.exponential()
                         : 1.0;
    const double capacity = config.c0 * std::log2(1.0 + config.power_level * h);
    capacity_sum += capacity;
    for (int c = 0; c < 2; ++c) {
      credit[c] += share[c] * capacity;
      while (credit[c] >= 1.0 && !queue[c].empty()) {
        latency_sum[c] += t - queue[c].front() + 1;
        queue[c].pop_front();
        ++served[c];
        credit[c] -= 1.0;
      }
      if (queue[c].empty()) credit[c] = 0.0;  // no banking of idle capacity
    }
  }

  // packets still queued are censored at episode end
  for (int c = 0; c < 2; ++c) {
    for (int arrival : queue[c]) {
      latency_sum[c] += config.episode_slots - arrival + 1;
      ++served[c];
    }
  }

  SchedulerResult result;
  const double mean_capacity =
      config.episode_slots > 0 ? capacity_sum / config.episode_slots : 0.0;
  result.high_mean_latency_slots = served[0] > 0 ? latency_sum[0] / served[0] : 0.0;
  result.low_mean_latency_slots =
      served[1] > 0 ? latency_sum[1] / served[1]
                    : (rate[1] > 0.0 ? static_cast<double>(config.episode_slots) : 0.0);
  result.high_latency_loss =
      std::clamp(result.high_mean_latency_slots / config.latency_max, 0.0, 1.0);
  result.energy_delay = config.power_level * result.low_mean_latency_slots;
  result.unstable_high = rate[0] > 0.0 && rate[0] >= share[0] * mean_capacity;
  result.unstable_low = rate[1] > 0.0 && rate[1] >= share[1] * mean_capacity;
  return result;
}

}  // namespace concal::sim
