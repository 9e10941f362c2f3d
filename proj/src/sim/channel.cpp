#include "concal/sim/channel.hpp"

#include <algorithm>
#include <cmath>

#include "concal/kernels.hpp"

namespace concal::sim {

void ChannelParams::validate() const {
  CONCAL_REQUIRE(y_min > 0.0 && y_max > y_min, "ChannelParams: need 0 < y_min < y_max");
  CONCAL_REQUIRE(p_stable_to_fade >= 0.0 && p_stable_to_fade <= 1.0 && p_fade_to_stable >= 0.0 &&
                     p_fade_to_stable <= 1.0,
                 "ChannelParams: transition probabilities must be in [0,1]");
  CONCAL_REQUIRE(stable_sigma >= 0.0 && fade_sigma >= 0.0,
                 "ChannelParams: noise levels must be nonnegative");
}

double ChannelParams::stationary_fade() const {
  const double denom = p_stable_to_fade + p_fade_to_stable;
  if (denom <= 0.0) return 0.0;
  return p_stable_to_fade / denom;
}

ChannelState channel_step(const ChannelParams& params, ChannelState state, Rng& rng) {
  if (state.mode == ChannelMode::kStable) {
    if (rng.bernoulli(params.p_stable_to_fade)) state.mode = ChannelMode::kFade;
  } else {
    if (rng.bernoulli(params.p_fade_to_stable)) state.mode = ChannelMode::kStable;
  }
  const bool stable = state.mode == ChannelMode::kStable;
  const double a = stable ? params.stable_a : params.fade_a;
  const double b = stable ? params.stable_b : params.fade_b;
  const double sigma = stable ? params.stable_sigma : params.fade_sigma;
  double y = a * state.gain + b;
  if (sigma > 0.0) y += sigma * rng.normal();
  state.gain = std::clamp(y, params.y_min, params.y_max);
  return state;
}

std::vector<double> channel_sample_trajectory(const ChannelParams& params, ChannelState start,
                                              std::size_t length, Rng& rng) {
  CONCAL_REQUIRE(start.gain >= params.y_min && start.gain <= params.y_max,
                 "channel_sample_trajectory: start gain out of bounds");
  std::vector<double> gains;
  gains.reserve(length);
  ChannelState state = start;
  for (std::size_t t = 0; t < length; ++t) {
    state = channel_step(params, state, rng);
    gains.push_back(state.gain);
  }
  return gains;
}

std::vector<std::vector<double>> trajectory_sampler(const ChannelParams& params,
                                                    ChannelState state, std::size_t horizon,
                                                    std::size_t m, Rng& rng) {
  CONCAL_REQUIRE(m >= 1, "trajectory_sampler: need at least one sample");
  std::vector<std::vector<double>> samples;
  samples.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    samples.push_back(channel_sample_trajectory(params, state, horizon, rng));
  return samples;
}

double choose_beta_gamma(double alpha, double beta, double x_max, double y_max) {
  CONCAL_REQUIRE(alpha > 0.0 && beta > 0.0 && beta < 1.0, "choose_beta_gamma: bad alpha/beta");
  CONCAL_REQUIRE(x_max > 0.0 && y_max > 0.0, "choose_beta_gamma: bad bounds");
  CONCAL_REQUIRE(beta < alpha / (x_max * y_max),
                 "choose_beta_gamma: beta too large for budget (needs beta < alpha/(x_max*y_max))");
  return (alpha - beta * x_max * y_max) / (1.0 - beta);
}

double power_from_set(double gamma, const PredictionSet& gain_set, double y_max, double x_max) {
  CONCAL_REQUIRE(gamma > 0.0, "power_from_set: gamma must be positive");
  if (gain_set.empty()) return std::min(x_max, gamma / y_max);
  const double worst =
      kernels::masked_max(gain_set.grid.data(), gain_set.mask.data(), gain_set.grid.size());
  return std::min(x_max, gamma / worst);
}

double interference(double x, double y) {
  CONCAL_REQUIRE(x >= 0.0 && y >= 0.0, "interference: power and gain must be nonnegative");
  return x * y;
}

}  // namespace concal::sim
