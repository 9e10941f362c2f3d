#include "concal/risk_control.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <sstream>

namespace concal {

namespace {

long safe_ceil(double v) { return static_cast<long>(std::ceil(v - 1e-9)); }

// P(Bin(n, p) <= k) via the stable term recurrence
// term_{i+1} = term_i * ((n-i)/(i+1)) * (p/(1-p)), term_0 = (1-p)^n,
// carried in log space to survive large n.
double binomial_cdf(long n, double p, long k) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  const double log_ratio = std::log(p) - std::log1p(-p);
  double log_term = static_cast<double>(n) * std::log1p(-p);
  double sum = 0.0;
  double scale = log_term;  // running max for the log-sum-exp
  sum = 1.0;
  for (long i = 0; i < k; ++i) {
    log_term += std::log(static_cast<double>(n - i)) - std::log(static_cast<double>(i + 1)) +
                log_ratio;
    if (log_term > scale) {
      sum = sum * std::exp(scale - log_term) + 1.0;
      scale = log_term;
    } else {
      sum += std::exp(log_term - scale);
    }
  }
  const double res = std::exp(scale) * sum;
  return std::min(res, 1.0);
}

}  // namespace

void RiskRequirement::validate() const {
  CONCAL_REQUIRE(alpha > 0.0 && alpha < 1.0, "RiskRequirement: alpha must be in (0,1)");
  CONCAL_REQUIRE(beta > 0.0 && beta < 1.0, "RiskRequirement: beta must be in (0,1)");
}

void CandidateGrid::validate() const {
  CONCAL_REQUIRE(!candidates.empty(), "CandidateGrid: empty candidate list");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (double v : candidates[i])
      CONCAL_REQUIRE(std::isfinite(v), "CandidateGrid: non-finite candidate entry");
    for (std::size_t j = i + 1; j < candidates.size(); ++j)
      CONCAL_REQUIRE(candidates[i] != candidates[j], "CandidateGrid: duplicate candidates");
  }
  if (!priority.empty()) {
    CONCAL_REQUIRE(priority.size() == candidates.size(),
                   "CandidateGrid: priority size mismatch");
    std::vector<bool> seen(candidates.size(), false);
    for (std::size_t idx : priority) {
      CONCAL_REQUIRE(idx < candidates.size() && !seen[idx],
                     "CandidateGrid: priority is not a permutation");
      seen[idx] = true;
    }
  }
}

double bernoulli_kl(double p, double q) {
  CONCAL_REQUIRE(p >= 0.0 && p <= 1.0 && q > 0.0 && q < 1.0, "bernoulli_kl: domain error");
  double kl = 0.0;
  if (p > 0.0) kl += p * std::log(p / q);
  if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return kl;
}

double hb_pvalue(long n, double r_hat, double alpha) {
  CONCAL_REQUIRE(n >= 1, "hb_pvalue: n must be >= 1");
  CONCAL_REQUIRE(r_hat >= 0.0 && r_hat <= 1.0, "hb_pvalue: r_hat must be in [0,1]");
  CONCAL_REQUIRE(alpha > 0.0 && alpha < 1.0, "hb_pvalue: alpha must be in (0,1)");
  const double p_h = std::exp(-static_cast<double>(n) * bernoulli_kl(std::min(r_hat, alpha), alpha));
  const long k = safe_ceil(static_cast<double>(n) * r_hat);
  const double p_b = std::exp(1.0) * binomial_cdf(n, alpha, k);
  return std::min({1.0, p_h, p_b});
}

TestOutcome bonferroni_ltt(std::span<const double> pvalues, double beta) {
  CONCAL_REQUIRE(beta > 0.0 && beta < 1.0, "bonferroni_ltt: beta must be in (0,1)");
  TestOutcome out;
  out.evidence.assign(pvalues.begin(), pvalues.end());
  out.samples_used.assign(pvalues.size(), 0);
  const double threshold = beta / static_cast<double>(pvalues.size());
  for (std::size_t i = 0; i < pvalues.size(); ++i) {
    CONCAL_REQUIRE(pvalues[i] > 0.0 && pvalues[i] <= 1.0, "bonferroni_ltt: p-value out of (0,1]");
    if (pvalues[i] <= threshold) out.discovered.push_back(i);
  }
  return out;
}

TestOutcome fixed_sequence_ltt(std::span<const double> ordered_pvalues, double beta) {
  CONCAL_REQUIRE(beta > 0.0 && beta < 1.0, "fixed_sequence_ltt: beta must be in (0,1)");
  TestOutcome out;
  out.evidence.assign(ordered_pvalues.begin(), ordered_pvalues.end());
  out.samples_used.assign(ordered_pvalues.size(), 0);
  for (std::size_t i = 0; i < ordered_pvalues.size(); ++i) {
    CONCAL_REQUIRE(ordered_pvalues[i] > 0.0 && ordered_pvalues[i] <= 1.0,
                   "fixed_sequence_ltt: p-value out of (0,1]");
    if (ordered_pvalues[i] > beta) break;
    out.discovered.push_back(i);
  }
  return out;
}

double eprocess_v_max(double alpha) { return 0.5 / (1.0 - alpha); }

double betting_update(const EProcess& state, double alpha) {
  CONCAL_REQUIRE(state.count >= 1, "betting_update: no observations yet");
  const double raw = state.sum_g / std::max(state.sum_g2, 1e-12);
  return std::clamp(raw, 0.0, eprocess_v_max(alpha));
}

EProcess eprocess_update(EProcess state, double loss, double alpha) {
  CONCAL_REQUIRE(loss >= 0.0 && loss <= 1.0, "eprocess_update: loss must be in [0,1]");
  CONCAL_REQUIRE(state.wealth >= 0.0, "eprocess_update: negative wealth");
  const double g = alpha - loss;
  // multiplier >= 1 - v_max*(1-alpha) = 0.5, so wealth stays positive
  state.wealth *= 1.0 + state.bet * g;
  state.count += 1;
  state.sum_g += g;
  state.sum_g2 += g * g;
  state.bet = betting_update(state, alpha);
  return state;
}

TestOutcome altt_run(const LossSource& source, const CandidateGrid& grid, RiskRequirement req,
                     const AlttOptions& options) {
  grid.validate();
  req.validate();
  CONCAL_REQUIRE(options.budget >= 0, "altt_run: negative budget");

  const std::size_t num = grid.size();
  const double ville_threshold = static_cast<double>(num) / req.beta;
  const double drop_floor = req.beta / (10.0 * static_cast<double>(num));

  std::vector<EProcess> procs(num);
  std::vector<bool> discovered(num, false), dropped(num, false);
  std::vector<long> last_served(num, -1);
  std::vector<long> samples(num, 0);
  long discoveries = 0;
  std::size_t resolved = 0;

  auto make_outcome = [&]() {
    TestOutcome out;
    out.evidence.resize(num);
    out.samples_used = samples;
    for (std::size_t i = 0; i < num; ++i) {
      out.evidence[i] = procs[i].wealth;
      if (discovered[i]) out.discovered.push_back(i);
    }
    return out;
  };

  std::size_t rr_cursor = 0;
  for (long round = 0; round < options.budget; ++round) {
    if (resolved == num) break;
    if (options.target_discoveries >= 0 && discoveries >= options.target_discoveries) break;

    // pick an unresolved arm
    std::size_t pick = num;
    if (options.arm_policy == ArmPolicy::kRoundRobin) {
      for (std::size_t step = 0; step < num; ++step) {
        const std::size_t i = (rr_cursor + step) % num;
        if (!discovered[i] && !dropped[i]) {
          pick = i;
          rr_cursor = (i + 1) % num;
          break;
        }
      }
    } else {
      // largest wealth first; least-recently-served wins ties (round-robin
      // among equal-wealth arms), index as the final tiebreak
      for (std::size_t i = 0; i < num; ++i) {
        if (discovered[i] || dropped[i]) continue;
        if (pick == num || procs[i].wealth > procs[pick].wealth ||
            (procs[i].wealth == procs[pick].wealth && last_served[i] < last_served[pick])) {
          pick = i;
        }
      }
    }
    if (pick == num) break;

    const std::optional<double> loss = source(pick, round);
    if (!loss.has_value()) {
      throw LossSourceError("altt_run: loss source failed for candidate " + std::to_string(pick),
                            make_outcome());
    }
    CONCAL_REQUIRE(*loss >= 0.0 && *loss <= 1.0, "altt_run: loss must be in [0,1]");

    procs[pick] = eprocess_update(procs[pick], *loss, req.alpha);
    samples[pick] += 1;
    last_served[pick] = round;

    if (procs[pick].wealth >= ville_threshold) {
      discovered[pick] = true;
      ++discoveries;
      ++resolved;
    } else if (procs[pick].wealth < drop_floor) {
      dropped[pick] = true;
      ++resolved;
    }
  }
  return make_outcome();
}

std::optional<std::size_t> select_best(const TestOutcome& outcome,
                                       std::span<const double> secondary_kpi) {
  std::optional<std::size_t> best;
  for (std::size_t idx : outcome.discovered) {
    CONCAL_REQUIRE(idx < secondary_kpi.size(), "select_best: KPI missing for discovered candidate");
    if (!best.has_value() || secondary_kpi[idx] < secondary_kpi[*best]) best = idx;
  }
  return best;
}

std::vector<LossRecord> parse_loss_log(const std::string& csv_text) {
  std::vector<LossRecord> records;
  std::istringstream in(csv_text);
  std::string line;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_skipped) {
      header_skipped = true;
      if (line.find("round") != std::string::npos) continue;  // header row
    }
    std::istringstream row(line);
    std::string cell;
    LossRecord rec;
    std::getline(row, cell, ',');
    rec.round = std::stol(cell);
    std::getline(row, cell, ',');
    rec.candidate = static_cast<std::size_t>(std::stoul(cell));
    std::getline(row, cell, ',');
    rec.loss = std::stod(cell);
    records.push_back(rec);
  }
  return records;
}

LossSource make_replay_source(std::vector<LossRecord> records, std::size_t num_candidates) {
  std::stable_sort(records.begin(), records.end(),
                   [](const LossRecord& a, const LossRecord& b) { return a.round < b.round; });
  auto queues = std::make_shared<std::vector<std::deque<double>>>(num_candidates);
  for (const auto& rec : records) {
    CONCAL_REQUIRE(rec.candidate < num_candidates, "replay source: candidate index out of range");
    (*queues)[rec.candidate].push_back(rec.loss);
  }
  return [queues](std::size_t candidate, long) -> std::optional<double> {
    auto& q = (*queues)[candidate];
    if (q.empty()) return std::nullopt;
    const double loss = q.front();
    q.pop_front();
    return loss;
  };
}

}  // namespace concal
