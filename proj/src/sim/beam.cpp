#include "concal/sim/beam.hpp"

#include <algorithm>
#include <cmath>

#include "concal/kernels.hpp"

namespace concal::sim {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double angular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}
}  // namespace

void BeamEnvironment::validate() const {
  CONCAL_REQUIRE(codebook_size >= 2, "BeamEnvironment: codebook needs at least 2 beams");
  CONCAL_REQUIRE(num_bins >= 1, "BeamEnvironment: need at least one location bin");
  CONCAL_REQUIRE(bin_amplitude.size() == num_bins && bin_noise.size() == num_bins &&
                     bin_lobe_width.size() == num_bins,
                 "BeamEnvironment: per-bin parameter size mismatch");
  CONCAL_REQUIRE(snr_floor > 0.0, "BeamEnvironment: snr_floor must be positive");
  for (std::size_t b = 0; b < num_bins; ++b) {
    CONCAL_REQUIRE(bin_amplitude[b] > 0.0 && bin_lobe_width[b] > 0.0 && bin_noise[b] >= 0.0,
                   "BeamEnvironment: bad per-bin parameters");
  }
  CONCAL_REQUIRE(p_move >= 0.0 && p_move <= 0.5, "BeamEnvironment: p_move must be in [0,0.5]");
}

double BeamEnvironment::mean_snr(std::size_t bin, std::size_t beam) const {
  const double beam_dir = kTwoPi * static_cast<double>(beam) / static_cast<double>(codebook_size);
  const double bin_dir = kTwoPi * static_cast<double>(bin) / static_cast<double>(num_bins);
  const double d = angular_distance(beam_dir, bin_dir);
  const double w = bin_lobe_width[bin];
  return bin_amplitude[bin] * std::exp(-(d * d) / (2.0 * w * w)) + snr_floor;
}

BeamPredictor BeamPredictor::make(const BeamEnvironment& env, double decay) {
  CONCAL_REQUIRE(decay > 0.0 && decay < 1.0, "BeamPredictor: decay must be in (0,1)");
  BeamPredictor p;
  p.num_bins = env.num_bins;
  p.codebook_size = env.codebook_size;
  p.decay = decay;
  p.ema.assign(env.num_bins * env.codebook_size, 1.0);
  return p;
}

std::span<const double> BeamPredictor::confidences(std::size_t bin) const {
  CONCAL_REQUIRE(bin < num_bins, "BeamPredictor: bin out of range");
  return {ema.data() + bin * codebook_size, codebook_size};
}

void BeamPredictor::update(std::size_t bin, std::span<const double> snr) {
  CONCAL_REQUIRE(bin < num_bins && snr.size() == codebook_size,
                 "BeamPredictor: bad update shape");
  kernels::ema_update(ema.data() + bin * codebook_size, snr.data(), codebook_size, decay);
}

BeamObservation beam_observe(const BeamEnvironment& env, std::size_t& location, Rng& rng) {
  const double r = rng.uniform01();
  if (r < env.p_move) {
    location = (location + 1) % env.num_bins;
  } else if (r < 2.0 * env.p_move) {
    location = (location + env.num_bins - 1) % env.num_bins;
  }
  BeamObservation obs;
  obs.bin = location;
  obs.snr.resize(env.codebook_size);
  const double sigma = env.bin_noise[location];
  for (std::size_t k = 0; k < env.codebook_size; ++k) {
    double s = env.mean_snr(location, k);
    if (sigma > 0.0) s += sigma * rng.normal();
    obs.snr[k] = std::max(env.snr_floor, s);
  }
  return obs;
}

BeamDecision beam_evaluate(std::span<const double> confidence, std::span<const double> snr,
                           double lambda) {
  CONCAL_REQUIRE(confidence.size() == snr.size() && !snr.empty(),
                 "beam_evaluate: confidence/snr size mismatch");
  BeamDecision decision;
  decision.candidate_mask.resize(confidence.size());
  decision.set_size =
      kernels::mask_ge(confidence.data(), confidence.size(), lambda, decision.candidate_mask.data());
  const double best = snr[kernels::argmax(snr.data(), snr.size())];
  if (decision.set_size == 0) {
    decision.risk = 1.0;
    return decision;
  }
  const double best_in_set =
      kernels::masked_max(snr.data(), decision.candidate_mask.data(), snr.size());
  decision.risk = std::clamp((best - best_in_set) / best, 0.0, 1.0);
  return decision;
}

BeamStepResult beam_step(const BeamEnvironment& env, BeamPredictor& predictor,
                         std::size_t& location, double lambda, Rng& rng) {
  const BeamObservation obs = beam_observe(env, location, rng);
  BeamStepResult result;
  result.context_bin = obs.bin;
  result.decision = beam_evaluate(predictor.confidences(obs.bin), obs.snr, lambda);
  predictor.update(obs.bin, obs.snr);
  return result;
}

}  // namespace concal::sim
