#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "concal/risk_control.hpp"
#include "concal/rng.hpp"

using namespace concal;

TEST_CASE("hb_pvalue hand and oracle values") {
  // r_hat >= alpha forces p = 1
  CHECK(hb_pvalue(10, 0.3, 0.3) == 1.0);
  CHECK(hb_pvalue(50, 0.9, 0.2) == 1.0);
  // n=1, single zero loss at alpha=0.5: p_H = exp(-KL(0||0.5)) = 0.5
  CHECK(hb_pvalue(1, 0.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  // frozen against an independent high-precision evaluation of the Bernoulli
  // KL and binomial CDF
  CHECK(hb_pvalue(100, 0.05, 0.2) ==
        doctest::Approx(5.0777684778581510693e-05).epsilon(1e-10));
  CHECK(hb_pvalue(10, 0.1, 0.3) == doctest::Approx(0.31247913942930370384).epsilon(1e-10));
  CHECK(hb_pvalue(50, 0.2, 0.25) == doctest::Approx(0.70461386716771843668).epsilon(1e-10));
  CHECK(hb_pvalue(200, 0.12, 0.2) == doctest::Approx(0.0053340095396591880018).epsilon(1e-10));
  CHECK(hb_pvalue(7, 0.0, 0.4) == doctest::Approx(0.0279936).epsilon(1e-10));
  CHECK_THROWS_AS(hb_pvalue(10, 1.5, 0.3), ContractViolation);
  CHECK_THROWS_AS(hb_pvalue(0, 0.5, 0.3), ContractViolation);
}

// Super-uniformity at the null boundary: Bernoulli(alpha) losses.
TEST_CASE("hb_pvalue is super-uniform under the boundary null") {
  const int reps = 10000, n = 40;
  const double alpha = 0.3;
  Rng rng(99);
  std::vector<double> pvals(reps);
  for (int rep = 0; rep < reps; ++rep) {
    int sum = 0;
    for (int i = 0; i < n; ++i) sum += rng.bernoulli(alpha) ? 1 : 0;
    pvals[rep] = hb_pvalue(n, static_cast<double>(sum) / n, alpha);
  }
  for (double u : {0.01, 0.05, 0.1}) {
    int hits = 0;
    for (double p : pvals) hits += p <= u;
    const double fraction = static_cast<double>(hits) / reps;
    CHECK(fraction <= u + 3.0 * std::sqrt(u * (1.0 - u) / reps));
  }
}

TEST_CASE("bonferroni_ltt") {
  SUBCASE("hand comparison") {
    const std::vector<double> p = {0.001, 0.2, 0.004};
    const auto out = bonferroni_ltt(p, 0.1);
    CHECK(out.discovered == std::vector<std::size_t>{0, 2});
  }
  SUBCASE("all ones discover nothing") {
    const std::vector<double> p = {1.0, 1.0, 1.0};
    CHECK(bonferroni_ltt(p, 0.1).discovered.empty());
  }
  SUBCASE("single test") {
    const std::vector<double> p = {0.05};
    CHECK(bonferroni_ltt(p, 0.1).discovered == std::vector<std::size_t>{0});
  }
}

TEST_CASE("fixed_sequence_ltt") {
  SUBCASE("stops at first failure") {
    const std::vector<double> p = {0.01, 0.2, 0.01};
    CHECK(fixed_sequence_ltt(p, 0.1).discovered == std::vector<std::size_t>{0});
  }
  SUBCASE("all pass") {
    const std::vector<double> p = {0.05, 0.1, 0.02};
    CHECK(fixed_sequence_ltt(p, 0.1).discovered.size() == 3);
  }
  SUBCASE("immediate stop") {
    const std::vector<double> p = {0.2, 0.01};
    CHECK(fixed_sequence_ltt(p, 0.1).discovered.empty());
  }
}

TEST_CASE("eprocess_update arithmetic") {
  EProcess state;
  SUBCASE("wealth multiplies by 1 + v*(alpha - loss)") {
    state.bet = 0.5;
    state = eprocess_update(state, 0.0, 0.5);
    CHECK(state.wealth == 1.25);
  }
  SUBCASE("zero bet leaves wealth unchanged") {
    state.bet = 0.0;
    state = eprocess_update(state, 0.9, 0.5);
    CHECK(state.wealth == 1.0);
  }
  SUBCASE("losses shrink wealth") {
    state.wealth = 2.0;
    state.bet = 0.4;
    state = eprocess_update(state, 1.0, 0.5);
    CHECK(state.wealth == doctest::Approx(1.6).epsilon(1e-15));
  }
  SUBCASE("loss outside [0,1] rejected") {
    CHECK_THROWS_AS(eprocess_update(state, 1.5, 0.5), ContractViolation);
  }
}

TEST_CASE("betting_update aGRAPA rule") {
  SUBCASE("zero numerator means no bet") {
    EProcess state;
    state.count = 3;
    state.sum_g = 0.0;
    state.sum_g2 = 0.1;
    CHECK(betting_update(state, 0.5) == 0.0);
  }
  SUBCASE("single round, alpha=0.5, loss=0 clips to v_max=1") {
    EProcess state = eprocess_update(EProcess{}, 0.0, 0.5);
    CHECK(state.bet == 1.0);  // raw 0.5/0.25 = 2.0 clipped to 0.5/(1-0.5)
  }
  SUBCASE("negative evidence never bets") {
    EProcess state;
    state.count = 5;
    state.sum_g = -2.0;
    state.sum_g2 = 1.0;
    CHECK(betting_update(state, 0.2) == 0.0);
  }
}

TEST_CASE("eprocess wealth stays positive") {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    EProcess state;
    const double alpha = rng.uniform(0.05, 0.95);
    for (int t = 0; t < 200; ++t) {
      state = eprocess_update(state, rng.bernoulli(0.5) ? 1.0 : 0.0, alpha);
      CHECK(state.wealth > 0.0);
      CHECK(state.bet >= 0.0);
      CHECK(state.bet <= eprocess_v_max(alpha));
    }
  }
}

// Supermartingale property at the boundary null: mean wealth at a fixed round
// stays near or below 1.
TEST_CASE("eprocess is a supermartingale under Bernoulli(alpha) losses") {
  const int reps = 4000, rounds = 50;
  const double alpha = 0.4;
  Rng rng(17);
  double total = 0.0, total_sq = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    EProcess state;
    for (int t = 0; t < rounds; ++t)
      state = eprocess_update(state, rng.bernoulli(alpha) ? 1.0 : 0.0, alpha);
    total += state.wealth;
    total_sq += state.wealth * state.wealth;
  }
  const double mean_wealth = total / reps;
  const double var = total_sq / reps - mean_wealth * mean_wealth;
  const double se = std::sqrt(std::max(var, 0.0) / reps);
  CHECK(mean_wealth <= 1.0 + 3.0 * se);
}

namespace {

CandidateGrid one_candidate() {
  CandidateGrid grid;
  grid.candidates = {{0.0}};
  return grid;
}

}  // namespace

TEST_CASE("altt_run hand-traced discovery at round 7") {
  // loss identically 0 at alpha=0.5, beta=0.1: after the first round the bet
  // clips to v_max=1 and wealth multiplies by 1.5; threshold 1/0.1 = 10 is
  // crossed at round 7.
  const LossSource source = [](std::size_t, long) { return 0.0; };
  AlttOptions options;
  options.budget = 100;
  const auto out = altt_run(source, one_candidate(), {0.5, 0.1}, options);
  CHECK(out.discovered == std::vector<std::size_t>{0});
  CHECK(out.samples_used == std::vector<long>{7});
  CHECK(out.evidence[0] >= 10.0);
}

TEST_CASE("altt_run with loss 1 never discovers") {
  const LossSource source = [](std::size_t, long) { return 1.0; };
  AlttOptions options;
  options.budget = 200;
  const auto out = altt_run(source, one_candidate(), {0.5, 0.1}, options);
  CHECK(out.discovered.empty());
  CHECK(out.samples_used[0] == 200);
  CHECK(out.evidence[0] == 1.0);  // v stays 0, wealth frozen at 1
}

TEST_CASE("altt_run with zero budget") {
  const LossSource source = [](std::size_t, long) { return 0.0; };
  AlttOptions options;
  options.budget = 0;
  CandidateGrid grid;
  grid.candidates = {{0.0}, {1.0}};
  const auto out = altt_run(source, grid, {0.5, 0.1}, options);
  CHECK(out.discovered.empty());
  CHECK(out.samples_used == std::vector<long>{0, 0});
}

TEST_CASE("altt_run source failure carries the partial outcome") {
  const LossSource source = [](std::size_t, long round) -> std::optional<double> {
    if (round >= 3) return std::nullopt;
    return 0.0;
  };
  AlttOptions options;
  options.budget = 100;
  try {
    altt_run(source, one_candidate(), {0.5, 0.1}, options);
    FAIL("expected LossSourceError");
  } catch (const LossSourceError& e) {
    CHECK(e.partial.samples_used[0] == 3);
    CHECK(e.partial.discovered.empty());
  }
}

TEST_CASE("altt_run is deterministic for identical loss streams") {
  auto run_once = [] {
    Rng rng(31);
    std::vector<std::vector<double>> losses(3);
    for (auto& stream : losses)
      for (int i = 0; i < 300; ++i) stream.push_back(rng.bernoulli(0.2) ? 1.0 : 0.0);
    std::vector<std::size_t> cursor(3, 0);
    const LossSource source = [&](std::size_t c, long) { return losses[c][cursor[c]++]; };
    CandidateGrid grid;
    grid.candidates = {{0.0}, {1.0}, {2.0}};
    AlttOptions options;
    options.budget = 500;
    return altt_run(source, grid, {0.4, 0.1}, options);
  };
  const auto a = run_once();
  const auto b = run_once();
  CHECK(a.discovered == b.discovered);
  CHECK(a.samples_used == b.samples_used);
  CHECK(a.evidence == b.evidence);  // bitwise-identical wealth
}

TEST_CASE("altt_run round-robin policy spreads samples evenly") {
  const LossSource source = [](std::size_t, long) { return 1.0; };  // nobody resolves
  CandidateGrid grid;
  grid.candidates = {{0.0}, {1.0}, {2.0}};
  AlttOptions options;
  options.budget = 99;
  options.arm_policy = ArmPolicy::kRoundRobin;
  const auto out = altt_run(source, grid, {0.5, 0.1}, options);
  CHECK(out.samples_used == std::vector<long>{33, 33, 33});
}

TEST_CASE("altt_run wealth-first policy concentrates on the growing arm") {
  // candidate 0 accumulates evidence, candidate 1 never does
  const LossSource source = [](std::size_t c, long) { return c == 0 ? 0.0 : 1.0; };
  CandidateGrid grid;
  grid.candidates = {{0.0}, {1.0}};
  AlttOptions options;
  options.budget = 12;
  const auto out = altt_run(source, grid, {0.5, 0.1}, options);
  CHECK(out.discovered == std::vector<std::size_t>{0});
  CHECK(out.samples_used[0] > out.samples_used[1]);
}

TEST_CASE("altt_run stops early at the requested discovery count") {
  const LossSource source = [](std::size_t, long) { return 0.0; };
  CandidateGrid grid;
  grid.candidates = {{0.0}, {1.0}};
  AlttOptions options;
  options.budget = 1000;
  options.target_discoveries = 1;
  const auto out = altt_run(source, grid, {0.5, 0.1}, options);
  CHECK(out.discovered.size() == 1);
  CHECK(out.samples_used[0] + out.samples_used[1] < 1000);
}

TEST_CASE("select_best") {
  TestOutcome outcome;
  outcome.discovered = {1, 3};
  const std::vector<double> kpi = {0.0, 5.0, 0.0, 2.0};
  CHECK(select_best(outcome, kpi) == 3);
  outcome.discovered = {};
  CHECK_FALSE(select_best(outcome, kpi).has_value());
  outcome.discovered = {1, 3};
  const std::vector<double> tied = {9.0, 2.0, 9.0, 2.0};
  CHECK(select_best(outcome, tied) == 1);  // ties to the lowest index
}

TEST_CASE("csv loss log replay") {
  const std::string csv =
      "round,candidate_index,loss\n"
      "0,0,0.0\n"
      "1,1,1.0\n"
      "2,0,0.0\n"
      "3,0,0.25\n";
  const auto records = parse_loss_log(csv);
  REQUIRE(records.size() == 4);
  CHECK(records[1].candidate == 1);
  CHECK(records[3].loss == 0.25);
  auto source = make_replay_source(records, 2);
  CHECK(source(0, 0) == 0.0);
  CHECK(source(1, 1) == 1.0);
  CHECK(source(0, 2) == 0.0);
  CHECK(source(0, 3) == 0.25);
  CHECK_FALSE(source(0, 4).has_value());  // candidate 0 exhausted
}

// FWER over a grid straddling alpha, all three procedures; trimmed here, the
// acceptance suite runs the full 2000-run version.
TEST_CASE("family-wise error stays below beta (trimmed MC)") {
  const double alpha = 0.4, beta = 0.1;
  const int runs = 400, num = 10, n_per = 60;
  // true means: first half violating (E[loss] > alpha), second half safe
  std::vector<double> mu(num);
  for (int c = 0; c < num; ++c) mu[c] = c < 5 ? alpha + 0.1 : alpha - 0.1;
  CandidateGrid grid;
  std::vector<std::size_t> priority;
  for (int c = 0; c < num; ++c) {
    grid.candidates.push_back({static_cast<double>(c)});
    priority.push_back(static_cast<std::size_t>(num - 1 - c));  // safe ones first
  }
  int false_bonf = 0, false_seq = 0, false_altt = 0;
  Rng rng(2024);
  for (int run = 0; run < runs; ++run) {
    std::vector<double> pvalues(num);
    for (int c = 0; c < num; ++c) {
      int sum = 0;
      for (int i = 0; i < n_per; ++i) sum += rng.bernoulli(mu[c]) ? 1 : 0;
      pvalues[c] = hb_pvalue(n_per, static_cast<double>(sum) / n_per, alpha);
    }
    auto violates = [&](const std::vector<std::size_t>& discovered,
                        const std::vector<std::size_t>& order) {
      for (std::size_t idx : discovered) {
        const std::size_t c = order.empty() ? idx : order[idx];
        if (mu[c] > alpha) return true;
      }
      return false;
    };
    false_bonf += violates(bonferroni_ltt(pvalues, beta).discovered, {});
    std::vector<double> ordered(num);
    for (int i = 0; i < num; ++i) ordered[i] = pvalues[priority[static_cast<std::size_t>(i)]];
    false_seq += violates(fixed_sequence_ltt(ordered, beta).discovered, priority);
    const LossSource source = [&](std::size_t c, long) {
      return rng.bernoulli(mu[c]) ? 1.0 : 0.0;
    };
    AlttOptions options;
    options.budget = 200 + static_cast<long>(rng.uniform_int(400));  // randomized stopping
    false_altt += violates(altt_run(source, grid, {alpha, beta}, options).discovered, {});
  }
  const double tol = beta + 3.0 * std::sqrt(beta * (1 - beta) / runs);
  CHECK(static_cast<double>(false_bonf) / runs <= tol);
  CHECK(static_cast<double>(false_seq) / runs <= tol);
  CHECK(static_cast<double>(false_altt) / runs <= tol);
}
