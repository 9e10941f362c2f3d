#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "concal/conformal.hpp"
#include "concal/rng.hpp"

using namespace concal;

TEST_CASE("score_neg_squared hand values") {
  CHECK(score_neg_squared(2.0, 2.0) == 0.0);
  CHECK(score_neg_squared(2.0, 5.0) == -9.0);
  const std::vector<double> y = {1.0, 1.0}, y_hat = {0.0, 0.0};
  CHECK(score_neg_squared(y, y_hat) == -2.0);
  CHECK_THROWS_AS(score_neg_squared(y, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("score_multi_sample hand values and M=1 reduction") {
  const std::vector<double> samples = {1.0, 5.0};
  CHECK(score_multi_sample(2.0, samples) == -1.0);
  CHECK(score_multi_sample(5.0, samples) == 0.0);
  const std::vector<double> one = {7.0};
  CHECK(score_multi_sample(2.0, one) == -25.0);
  CHECK(score_multi_sample(2.0, one) == score_neg_squared(2.0, 7.0));
  CHECK_THROWS_AS(score_multi_sample(2.0, std::vector<double>{}), ContractViolation);
}

TEST_CASE("ScoreKind invariant") {
  ScoreKind kind;
  kind.tag = ScoreKind::Tag::kMultiSampleNegSquared;
  kind.samples_m = 1;
  kind.validate();  // M=1 is legal and reduces to NegSquared
  kind.samples_m = 0;
  CHECK_THROWS_AS(kind.validate(), ContractViolation);
}

TEST_CASE("score dominance and M=1 reduction on random inputs") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const double y = rng.uniform(-4.0, 4.0);
    std::vector<double> samples(1 + rng.uniform_int(8));
    for (auto& s : samples) s = rng.uniform(-4.0, 4.0);
    const double multi = score_multi_sample(y, samples);
    for (double s : samples) CHECK(multi >= score_neg_squared(y, s));
    const std::vector<double> single = {samples[0]};
    CHECK(score_multi_sample(y, single) == score_neg_squared(y, samples[0]));
  }
}

TEST_CASE("conformal_threshold order statistics") {
  CalibrationSet calib{{1.0, 2.0, 3.0, 4.0}};
  SUBCASE("k=3 at beta=0.4") {
    const auto thr = conformal_threshold(calib, {0.4});
    REQUIRE_FALSE(thr.is_include_all());
    CHECK(thr.value == 3.0);
  }
  SUBCASE("k exceeds n at beta=0.1") {
    const auto thr = conformal_threshold(calib, {0.1});
    CHECK(thr.is_include_all());
    CHECK(thr.confidence_threshold() == -std::numeric_limits<double>::infinity());
  }
  SUBCASE("single point") {
    const auto thr = conformal_threshold(CalibrationSet{{7.0}}, {0.5});
    REQUIRE_FALSE(thr.is_include_all());
    CHECK(thr.value == 7.0);
  }
  SUBCASE("empty set errors") {
    CHECK_THROWS_AS(conformal_threshold(CalibrationSet{{}}, {0.5}), InsufficientData);
  }
  SUBCASE("integer boundary (n+1)(1-beta) does not misfire") {
    // n=9, beta=0.1: 10*0.9 = 9 exactly; naive float ceil would give 10
    CalibrationSet nine{{1, 2, 3, 4, 5, 6, 7, 8, 9}};
    const auto thr = conformal_threshold(nine, {0.1});
    REQUIRE_FALSE(thr.is_include_all());
    CHECK(thr.value == 9.0);
  }
}

TEST_CASE("build_prediction_set thresholding and sentinels") {
  const std::vector<double> grid = {0.0, 1.0, 2.0};
  const std::vector<double> conf = {0.9, 0.2, 0.8};
  SUBCASE("direct comparison") {
    const auto set = build_prediction_set(grid, conf, 0.5);
    CHECK(set.mask == std::vector<std::uint8_t>{1, 0, 1});
    CHECK(set.count_included == 2);
    CHECK_FALSE(set.empty());
  }
  SUBCASE("include-all maps to -inf") {
    const auto set =
        build_prediction_set(grid, conf, -std::numeric_limits<double>::infinity());
    CHECK(set.count_included == 3);
  }
  SUBCASE("+inf gives the empty set, flagged not thrown") {
    const auto set = build_prediction_set(grid, conf, std::numeric_limits<double>::infinity());
    CHECK(set.count_included == 0);
    CHECK(set.empty());
  }
}

TEST_CASE("monotonicity: lowering the threshold never removes a point") {
  Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.uniform_int(40);
    std::vector<double> grid(n), conf(n);
    for (std::size_t i = 0; i < n; ++i) {
      grid[i] = static_cast<double>(i);
      conf[i] = rng.uniform(-1.0, 1.0);
    }
    double lam1 = rng.uniform(-1.0, 1.0);
    double lam2 = rng.uniform(-1.0, 1.0);
    if (lam1 > lam2) std::swap(lam1, lam2);
    const auto lo = build_prediction_set(grid, conf, lam1);
    const auto hi = build_prediction_set(grid, conf, lam2);
    for (std::size_t i = 0; i < n; ++i) {
      if (hi.mask[i]) CHECK(lo.mask[i]);  // set(lam2) subset of set(lam1)
    }
  }
}

TEST_CASE("set_to_intervals run-length extraction") {
  PredictionSet set;
  set.grid = {0, 1, 2, 3, 4};
  SUBCASE("hand example") {
    set.mask = {0, 1, 1, 0, 1};
    set.count_included = 3;
    const auto intervals = set_to_intervals(set);
    REQUIRE(intervals.size() == 2);
    CHECK(intervals[0].lo == 1.0);
    CHECK(intervals[0].hi == 2.0);
    CHECK(intervals[1].lo == 4.0);
    CHECK(intervals[1].hi == 4.0);  // singleton reported zero-width
  }
  SUBCASE("all included") {
    set.mask = {1, 1, 1, 1, 1};
    set.count_included = 5;
    const auto intervals = set_to_intervals(set);
    REQUIRE(intervals.size() == 1);
    CHECK(intervals[0].lo == 0.0);
    CHECK(intervals[0].hi == 4.0);
  }
  SUBCASE("none included") {
    set.mask = {0, 0, 0, 0, 0};
    set.count_included = 0;
    CHECK(set_to_intervals(set).empty());
  }
  SUBCASE("non-increasing grid rejected") {
    set.grid = {0, 1, 1, 3, 4};
    set.mask = {0, 0, 0, 0, 0};
    CHECK_THROWS_AS(set_to_intervals(set), ContractViolation);
  }
}

TEST_CASE("coverage_eval counting and snapping") {
  const std::vector<double> grid = {0.0, 1.0, 2.0};
  auto make_set = [&](std::vector<std::uint8_t> mask) {
    PredictionSet set;
    set.grid = grid;
    set.count_included = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    set.mask = std::move(mask);
    return set;
  };
  SUBCASE("full and empty") {
    std::vector<PredictionSet> sets = {make_set({1, 1, 1}), make_set({1, 1, 1})};
    std::vector<double> truths = {0.4, 1.9};
    CHECK(coverage_eval(truths, sets) == 1.0);
    sets = {make_set({0, 0, 0}), make_set({0, 0, 0})};
    CHECK(coverage_eval(truths, sets) == 0.0);
  }
  SUBCASE("3 of 4 covered") {
    std::vector<PredictionSet> sets = {make_set({1, 0, 0}), make_set({0, 1, 0}),
                                       make_set({0, 0, 1}), make_set({1, 0, 0})};
    std::vector<double> truths = {0.0, 1.2, 1.8, 2.0};  // last one misses
    CHECK(coverage_eval(truths, sets) == 0.75);
  }
  SUBCASE("midpoint ties snap to the lower index") {
    const auto set = make_set({1, 0, 0});
    CHECK(set_contains(set, 0.5));  // tie between 0 and 1 -> index 0
    CHECK_FALSE(set_contains(set, 1.5));
  }
  SUBCASE("empty list errors") {
    std::vector<PredictionSet> sets;
    std::vector<double> truths;
    CHECK_THROWS_AS(coverage_eval(truths, sets), InsufficientData);
  }
}

// Exchangeable-coverage property: i.i.d. continuous scores, calibrate with
// n=100, test once, repeat; empirical coverage must sit inside
// [1-beta, 1-beta+1/(n+1)] up to MC noise.
TEST_CASE("exchangeable coverage lands in the conformal window") {
  const int n = 100, reps = 2000;
  for (double beta : {0.1, 0.2}) {
    Rng rng(1234 + static_cast<int>(beta * 100));
    int covered = 0;
    for (int rep = 0; rep < reps; ++rep) {
      CalibrationSet calib;
      calib.nonconformity_scores.resize(n);
      for (auto& s : calib.nonconformity_scores) s = rng.normal();
      const auto thr = conformal_threshold(calib, {beta});
      const double test_score = rng.normal();
      covered += thr.is_include_all() || test_score <= thr.value;
    }
    const double coverage = static_cast<double>(covered) / reps;
    const double lo = 1.0 - beta;
    const double hi = 1.0 - beta + 1.0 / (n + 1.0);
    const double mc = 3.0 * std::sqrt((1.0 - beta) * beta / reps);
    CHECK(coverage >= lo - mc);
    CHECK(coverage <= hi + mc);
  }
}
