#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "concal/common.hpp"
#include "concal/rng.hpp"

namespace concal::sim {

// Codebook beam selection over a UE moving across location bins. Each bin has
// its own angular lobe width, SNR amplitude and noise level, so per-location
// confidence scales differ and an input-dependent threshold pays off.
struct BeamEnvironment {
  std::size_t codebook_size = 16;
  std::size_t num_bins = 8;
  std::vector<double> bin_amplitude;   // per-bin peak mean SNR
  std::vector<double> bin_noise;       // per-bin additive noise sigma
  std::vector<double> bin_lobe_width;  // per-bin angular response width (rad)
  double snr_floor = 0.05;
  double p_move = 0.25;  // probability of a +/-1 bin step each side

  void validate() const;
  // mean SNR of beam k at bin b
  double mean_snr(std::size_t bin, std::size_t beam) const;
};

// Per-(bin, beam) exponential moving average of observed SNRs; the desk-scale
// beam-quality predictor. Full-codebook feedback is assumed every step.
struct BeamPredictor {
  std::size_t num_bins = 0;
  std::size_t codebook_size = 0;
  double decay = 0.9;
  std::vector<double> ema;  // num_bins x codebook_size, row-major

  static BeamPredictor make(const BeamEnvironment& env, double decay = 0.9);
  std::span<const double> confidences(std::size_t bin) const;
  void update(std::size_t bin, std::span<const double> snr);
};

struct BeamObservation {
  std::size_t bin = 0;
  std::vector<double> snr;  // realized per-beam SNR this step
};

// Advance the UE random walk and draw this step's full-codebook SNRs.
BeamObservation beam_observe(const BeamEnvironment& env, std::size_t& location, Rng& rng);

struct BeamDecision {
  std::size_t set_size = 0;
  double risk = 0.0;  // normalized SNR degradation, in [0,1]
  std::vector<std::uint8_t> candidate_mask;
};

// Candidate set = beams with confidence >= lambda; risk = clip((best -
// best_in_set)/best, 0, 1), with an empty set scoring risk 1.
BeamDecision beam_evaluate(std::span<const double> confidence, std::span<const double> snr,
                           double lambda);

// Single-method convenience step: observe, evaluate against the threshold,
// then update the predictor with the full-codebook feedback. Returns the
// decision plus the context bin it was made in.
struct BeamStepResult {
  BeamDecision decision;
  std::size_t context_bin = 0;
};

BeamStepResult beam_step(const BeamEnvironment& env, BeamPredictor& predictor,
                         std::size_t& location, double lambda, Rng& rng);

}  // namespace concal::sim
