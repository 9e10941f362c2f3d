#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "concal/common.hpp"

namespace concal {

// Statistical KPI requirement Pr[R(lambda) > alpha] <= beta, with losses
// normalized to [0,1].
struct RiskRequirement {
  double alpha = 0.1;  // max tolerable expected loss
  double beta = 0.1;   // FWER level

  void validate() const;
};

struct CandidateGrid {
  std::vector<std::vector<double>> candidates;
  // Optional priority order for fixed-sequence testing; must be a permutation
  // of candidate indices chosen independently of the test data.
  std::vector<std::size_t> priority;

  std::size_t size() const { return candidates.size(); }
  void validate() const;
};

// Hoeffding-Bentkus p-value for the null E[loss] > alpha:
//   p = min(1, exp(-n*KL(min(r_hat,alpha) || alpha)), e*P(Bin(n,alpha) <= ceil(n*r_hat)))
double hb_pvalue(long n, double r_hat, double alpha);

// Bernoulli relative entropy KL(p||q); exposed for oracle cross-checks.
double bernoulli_kl(double p, double q);

struct TestOutcome {
  std::vector<std::size_t> discovered;   // certified candidate indices
  std::vector<double> evidence;          // per-candidate p-value or final wealth
  std::vector<long> samples_used;        // per-candidate sample counts
};

// discovered = { i : p_i <= beta/|Lambda| }
TestOutcome bonferroni_ltt(std::span<const double> pvalues, double beta);

// Walk pvalues in the supplied order; reject while p <= beta, stop at the
// first p > beta.
TestOutcome fixed_sequence_ltt(std::span<const double> ordered_pvalues, double beta);

// Betting wealth state for anytime-valid testing. Wealth starts at 1; the bet
// v lives in [0, v_max] with v_max = 0.5/(1-alpha).
struct EProcess {
  double wealth = 1.0;
  double bet = 0.0;
  long count = 0;
  double sum_g = 0.0;   // running sum of g_i = alpha - loss_i
  double sum_g2 = 0.0;  // running sum of g_i^2
};

double eprocess_v_max(double alpha);

// aGRAPA-style bet from the observed history:
//   v = clip(sum_g / max(sum_g2, 1e-12), 0, v_max)
double betting_update(const EProcess& state, double alpha);

// wealth' = wealth * (1 + v*(alpha - loss)), then the bet is refreshed from
// the updated history.
EProcess eprocess_update(EProcess state, double loss, double alpha);

// Yields one loss sample in [0,1] for (candidate, global round); nullopt
// signals source failure.
using LossSource = std::function<std::optional<double>(std::size_t candidate, long round)>;

// Loss-source failure, carrying the partial outcome accumulated so far.
struct LossSourceError : std::runtime_error {
  LossSourceError(const std::string& what, TestOutcome partial_outcome)
      : std::runtime_error(what), partial(std::move(partial_outcome)) {}
  TestOutcome partial;
};

enum class ArmPolicy {
  kLargestWealthFirst,  // default; round-robin among ties
  kRoundRobin,
};

struct AlttOptions {
  long budget = 0;               // max total samples across candidates
  long target_discoveries = -1;  // stop once reached; -1 = unlimited
  ArmPolicy arm_policy = ArmPolicy::kLargestWealthFirst;
};

// Adaptive LTT: one e-process per candidate, discovery at wealth >=
// |Lambda|/beta (Bonferroni-corrected Ville threshold, anytime-valid),
// candidates dropped from sampling when wealth < beta/(10*|Lambda|).
TestOutcome altt_run(const LossSource& source, const CandidateGrid& grid, RiskRequirement req,
                     const AlttOptions& options);

// argmin of the secondary KPI over the discovery set; ties to the lowest
// index; nullopt when nothing was discovered.
std::optional<std::size_t> select_best(const TestOutcome& outcome,
                                       std::span<const double> secondary_kpi);

// Offline replay record for CSV loss logs (columns: round, candidate_index, loss).
struct LossRecord {
  long round = 0;
  std::size_t candidate = 0;
  double loss = 0.0;
};

std::vector<LossRecord> parse_loss_log(const std::string& csv_text);

// LossSource replaying per-candidate losses in logged round order; exhausted
// candidates report failure.
LossSource make_replay_source(std::vector<LossRecord> records, std::size_t num_candidates);

}  // namespace concal
