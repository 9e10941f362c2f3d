#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "concal/common.hpp"
#include "concal/conformal.hpp"

namespace concal {

// One logged deployment episode: context features, the app the logging policy
// selected, its recorded propensity pi(a|x), and the realized scalar KPI.
struct LoggedEpisode {
  std::vector<double> context;
  int action = 0;
  double kpi = 0.0;
  double propensity = 0.0;

  void validate() const;
};

struct WeightedCalibSet {
  std::vector<double> nonconformity_scores;
  std::vector<double> weights;

  void validate() const;
};

// Likelihood ratio between contexts where the alternative app was deployed
// (density ~ 1-pi) and contexts where it was logged (density ~ pi), clipped:
//   w = min((1-pi)/pi, clip)
double counterfactual_weight(double pi_target_action, double clip);

// Smallest score s with (sum of weights at scores <= s) / (total + test
// weight) >= 1-beta; the test point carries mass test_weight at +inf.
// Reduces exactly to conformal_threshold under equal weights.
ConformalThreshold weighted_conformal_threshold(const WeightedCalibSet& calib, double test_weight,
                                                double beta);

// Presorted calibration for repeated queries against the same set with
// varying test weights (one sort amortized over many thresholds).
struct SortedWeightedCalib {
  std::vector<double> scores;   // ascending
  std::vector<double> weights;  // aligned with scores
  double total_weight = 0.0;

  static SortedWeightedCalib from(const WeightedCalibSet& calib);
};

ConformalThreshold weighted_threshold_presorted(const SortedWeightedCalib& calib,
                                                double test_weight, double beta);

struct KpiInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool include_all = false;  // true when the interval is the full KPI range
};

using KpiPredictor = std::function<double(std::span<const double> context)>;

// pi(target_action | x); the logging policy is the controller's own, so
// propensities are known exactly.
using PropensityFn = std::function<double(std::span<const double> context)>;

// Propensity-weighted conformal KPI interval for deploying target_action at
// query_context. Scores are |kpi - prediction| over log episodes with the
// target action, weighted by counterfactual_weight of their recorded
// propensities; the test mass uses the query context's propensity. On
// INCLUDE_ALL the interval is the full kpi_range.
KpiInterval counterfactual_interval(int target_action, std::span<const double> query_context,
                                    std::span<const LoggedEpisode> log,
                                    const KpiPredictor& predictor,
                                    const PropensityFn& propensity, double beta, double clip,
                                    std::pair<double, double> kpi_range);

// Same pipeline with all weights (including the test weight) equal to 1.
KpiInterval naive_interval(int target_action, std::span<const double> query_context,
                           std::span<const LoggedEpisode> log, const KpiPredictor& predictor,
                           double beta, std::pair<double, double> kpi_range);

// CSV log ingestion (columns: episode_id, context fields..., action,
// propensity, kpi).
std::vector<LoggedEpisode> parse_episode_log(const std::string& csv_text);
std::string format_episode_log(std::span<const LoggedEpisode> episodes);

}  // namespace concal
