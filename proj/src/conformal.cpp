#include "concal/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "concal/kernels.hpp"

namespace concal {

namespace {

// ceil with a guard against (n+1)(1-beta) landing one ulp above an exact
// integer, which would shift the order-statistic index by one.
long safe_ceil(double v) { return static_cast<long>(std::ceil(v - 1e-9)); }

}  // namespace

void ScoreKind::validate() const {
  CONCAL_REQUIRE(samples_m >= 1, "ScoreKind: samples_m must be >= 1");
}

double score_neg_squared(std::span<const double> y, std::span<const double> y_hat) {
  CONCAL_REQUIRE(y.size() == y_hat.size(), "score_neg_squared: dimension mismatch");
  CONCAL_REQUIRE(!y.empty(), "score_neg_squared: empty outcome");
  for (double v : y) CONCAL_REQUIRE(std::isfinite(v), "score_neg_squared: non-finite outcome");
  for (double v : y_hat)
    CONCAL_REQUIRE(std::isfinite(v), "score_neg_squared: non-finite prediction");
  return -kernels::sum_sq_diff(y.data(), y_hat.data(), y.size());
}

double score_neg_squared(double y, double y_hat) {
  return score_neg_squared(std::span<const double>(&y, 1), std::span<const double>(&y_hat, 1));
}

double score_multi_sample(std::span<const double> y,
                          const std::vector<std::vector<double>>& samples) {
  CONCAL_REQUIRE(!samples.empty(), "score_multi_sample: empty sample list");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    CONCAL_REQUIRE(s.size() == y.size(), "score_multi_sample: dimension mismatch");
    const double d = kernels::sum_sq_diff(y.data(), s.data(), y.size());
    if (d < best) best = d;
  }
  return -best;
}

double score_multi_sample(double y, std::span<const double> samples) {
  CONCAL_REQUIRE(!samples.empty(), "score_multi_sample: empty sample list");
  double conf = 0.0;
  kernels::min_sq_dist_score(&y, 1, samples.data(), samples.size(), &conf);
  return conf;
}

void CalibrationSet::validate() const {
  if (nonconformity_scores.empty())
    throw InsufficientData("CalibrationSet: empty calibration set");
  for (double s : nonconformity_scores)
    CONCAL_REQUIRE(std::isfinite(s), "CalibrationSet: non-finite score");
}

void CoverageTarget::validate() const {
  CONCAL_REQUIRE(beta > 0.0 && beta < 1.0, "CoverageTarget: beta must be in (0,1)");
}

double ConformalThreshold::confidence_threshold() const {
  if (is_include_all()) return -std::numeric_limits<double>::infinity();
  return -value;
}

ConformalThreshold conformal_threshold(const CalibrationSet& calib, CoverageTarget target) {
  calib.validate();
  target.validate();
  const auto n = static_cast<long>(calib.nonconformity_scores.size());
  const long k = safe_ceil(static_cast<double>(n + 1) * (1.0 - target.beta));
  if (k > n) return ConformalThreshold::include_all();
  // k >= 1 since (n+1)(1-beta) > 0
  std::vector<double> sorted = calib.nonconformity_scores;
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  return ConformalThreshold::finite(sorted[static_cast<std::size_t>(k - 1)]);
}

PredictionSet build_prediction_set(std::span<const double> grid,
                                   std::span<const double> confidences, double lambda_conf) {
  CONCAL_REQUIRE(!grid.empty(), "build_prediction_set: empty grid");
  CONCAL_REQUIRE(grid.size() == confidences.size(),
                 "build_prediction_set: grid/confidence size mismatch");
  CONCAL_REQUIRE(!std::isnan(lambda_conf), "build_prediction_set: NaN threshold");
  PredictionSet set;
  set.grid.assign(grid.begin(), grid.end());
  set.mask.resize(grid.size());
  set.threshold_used = lambda_conf;
  set.count_included =
      kernels::mask_ge(confidences.data(), confidences.size(), lambda_conf, set.mask.data());
  return set;
}

std::vector<Interval> set_to_intervals(const PredictionSet& set) {
  for (std::size_t i = 1; i < set.grid.size(); ++i)
    CONCAL_REQUIRE(set.grid[i] > set.grid[i - 1],
                   "set_to_intervals: grid must be strictly increasing");
  std::vector<Interval> intervals;
  std::size_t i = 0;
  const std::size_t n = set.grid.size();
  while (i < n) {
    if (!set.mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && set.mask[j + 1]) ++j;
    intervals.push_back({set.grid[i], set.grid[j]});
    i = j + 1;
  }
  return intervals;
}

bool set_contains(const PredictionSet& set, double truth) {
  // nearest grid point, ties to the lower index
  const auto& g = set.grid;
  auto it = std::lower_bound(g.begin(), g.end(), truth);
  std::size_t idx;
  if (it == g.begin()) {
    idx = 0;
  } else if (it == g.end()) {
    idx = g.size() - 1;
  } else {
    const std::size_t hi = static_cast<std::size_t>(it - g.begin());
    const std::size_t lo = hi - 1;
    idx = (truth - g[lo] <= g[hi] - truth) ? lo : hi;
  }
  return set.mask[idx] != 0;
}

double coverage_eval(std::span<const double> truths, std::span<const PredictionSet> sets) {
  if (truths.empty()) throw InsufficientData("coverage_eval: empty test list");
  CONCAL_REQUIRE(truths.size() == sets.size(), "coverage_eval: size mismatch");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) covered += set_contains(sets[i], truths[i]);
  return static_cast<double>(covered) / static_cast<double>(truths.size());
}

}  // namespace concal
