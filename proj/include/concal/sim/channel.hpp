#pragma once

#include <cstddef>
#include <vector>

#include "concal/common.hpp"
#include "concal/conformal.hpp"
#include "concal/rng.hpp"

namespace concal::sim {

enum class ChannelMode { kStable = 0, kFade = 1 };

// Two-state Markov-modulated AR(1) gain process with per-mode recursion
//   y' = a_mode * y + b_mode + sigma_mode * noise,
// clipped to [y_min, y_max]. The FADE mode's small AR coefficient produces
// the sharp drops that make the one-shot predictive distribution multi-modal
// over a horizon.
struct ChannelParams {
  double stable_a = 0.9, stable_b = 0.1, stable_sigma = 0.03;
  double fade_a = 0.25, fade_b = 0.02, fade_sigma = 0.02;
  double p_stable_to_fade = 0.06;
  double p_fade_to_stable = 0.12;
  double y_min = 0.05, y_max = 2.0;

  void validate() const;
  // stationary probability of the FADE mode
  double stationary_fade() const;
};

struct ChannelState {
  double gain = 1.0;
  ChannelMode mode = ChannelMode::kStable;
};

ChannelState channel_step(const ChannelParams& params, ChannelState state, Rng& rng);

// Markov-modulated AR trajectory of the given length, clipped to bounds;
// deterministic given the rng state.
std::vector<double> channel_sample_trajectory(const ChannelParams& params, ChannelState start,
                                              std::size_t length, Rng& rng);

// M independent rollouts from the current state: the desk-scale stand-in for
// a probabilistic trajectory predictor.
std::vector<std::vector<double>> trajectory_sampler(const ChannelParams& params,
                                                    ChannelState state, std::size_t horizon,
                                                    std::size_t m, Rng& rng);

// gamma = (alpha - beta*x_max*y_max) / (1-beta); requires
// beta < alpha/(x_max*y_max) so that gamma > 0. Guarantees
// E[R] <= (1-beta)*gamma + beta*x_max*y_max <= alpha when interference stays
// below gamma on coverage events.
double choose_beta_gamma(double alpha, double beta, double x_max, double y_max);

// x = min(x_max, gamma / max(set)); empty set falls back to the worst case
// x = min(x_max, gamma / y_max).
double power_from_set(double gamma, const PredictionSet& gain_set, double y_max, double x_max);

// instantaneous interference at the licensed receiver
double interference(double x, double y);

}  // namespace concal::sim
