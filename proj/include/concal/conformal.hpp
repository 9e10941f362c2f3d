#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "concal/common.hpp"

namespace concal {

// Confidence-score family. MultiSampleNegSquared with samples_m == 1 behaves
// identically to NegSquared.
struct ScoreKind {
  enum class Tag { kNegSquared, kMultiSampleNegSquared };
  Tag tag = Tag::kNegSquared;
  int samples_m = 1;

  void validate() const;
};

// confidence = -||y - y_hat||^2
double score_neg_squared(std::span<const double> y, std::span<const double> y_hat);
double score_neg_squared(double y, double y_hat);

// confidence = -min_m ||y - y_hat_m||^2; samples must be non-empty
double score_multi_sample(std::span<const double> y,
                          const std::vector<std::vector<double>>& samples);
double score_multi_sample(double y, std::span<const double> samples);

// Held-out nonconformity scores (nonconformity = -confidence).
struct CalibrationSet {
  std::vector<double> nonconformity_scores;

  void validate() const;
};

struct CoverageTarget {
  double beta = 0.1;  // tolerated miscoverage, in (0,1)

  void validate() const;
};

// Conformal quantile on the nonconformity scale, or the explicit
// include-everything sentinel when k = ceil((n+1)(1-beta)) exceeds n.
struct ConformalThreshold {
  enum class Kind { kFinite, kIncludeAll };
  Kind kind = Kind::kFinite;
  double value = 0.0;  // meaningful only when kind == kFinite

  static ConformalThreshold finite(double v) { return {Kind::kFinite, v}; }
  static ConformalThreshold include_all() { return {Kind::kIncludeAll, 0.0}; }
  bool is_include_all() const { return kind == Kind::kIncludeAll; }

  // Threshold mapped to the confidence scale (-value), with INCLUDE_ALL
  // mapped to -inf so that every candidate passes.
  double confidence_threshold() const;
};

// k-th smallest nonconformity score with k = ceil((n+1)(1-beta)); duplicates
// kept, 1-based index. Returns INCLUDE_ALL when k > n.
ConformalThreshold conformal_threshold(const CalibrationSet& calib, CoverageTarget target);

// Candidate grid with inclusion mask: mask[i] = confidence[i] >= lambda.
struct PredictionSet {
  std::vector<double> grid;
  std::vector<std::uint8_t> mask;
  double threshold_used = 0.0;
  std::size_t count_included = 0;

  bool empty() const { return count_included == 0; }
};

PredictionSet build_prediction_set(std::span<const double> grid,
                                   std::span<const double> confidences, double lambda_conf);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Maximal runs of included grid points as closed intervals; singletons are
// zero-width (lo == hi). Requires a strictly increasing scalar grid.
std::vector<Interval> set_to_intervals(const PredictionSet& set);

// Fraction of truths contained in their sets; truths are snapped to the
// nearest grid point, ties to the lower index.
double coverage_eval(std::span<const double> truths, std::span<const PredictionSet> sets);

// Membership after grid snapping; exposed for per-pair checks.
bool set_contains(const PredictionSet& set, double truth);

}  // namespace concal
