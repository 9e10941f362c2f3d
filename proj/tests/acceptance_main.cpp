// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Statistical criteria run at their stated scales and tolerances;
// runtime limits are asserted alongside.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "concal/conformal.hpp"
#include "concal/counterfactual.hpp"
#include "concal/harness/experiments.hpp"
#include "concal/io/config.hpp"
#include "concal/io/csv.hpp"
#include "concal/online.hpp"
#include "concal/risk_control.hpp"
#include "concal/rng.hpp"

using namespace concal;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void check(bool ok, const std::string& detail) {
    checks_.push_back({ok, detail});
    if (!ok) all_ok_ = false;
  }

  void finish(double runtime_limit_seconds) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (runtime_limit_seconds > 0.0 && elapsed >= runtime_limit_seconds) {
      all_ok_ = false;
      checks_.push_back({false, "runtime " + std::to_string(elapsed) + "s exceeds limit " +
                                    std::to_string(runtime_limit_seconds) + "s"});
    }
    std::printf("%s criterion %d: %s (%.1fs)\n", all_ok_ ? "PASS" : "FAIL", number_,
                title_.c_str(), elapsed);
    for (const auto& [ok, detail] : checks_) {
      std::printf("       %s %s\n", ok ? "ok  " : "FAIL", detail.c_str());
    }
    if (!all_ok_) ++g_failures;
  }

 private:
  int number_;
  std::string title_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<bool, std::string>> checks_;
  bool all_ok_ = true;
};

std::string num(double v) { return fmt_f64(v); }

Config shipped(const std::string& name) {
  return Config::load_file(std::string(CONCAL_CONFIG_DIR) + "/" + name);
}

fs::path out_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / "concal_acceptance" / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// 1. split-conformal coverage window
// ---------------------------------------------------------------------------
void criterion_1() {
  Criterion c(1, "conformal coverage in [1-beta, 1-beta+1/(n+1)] +/- 0.01");
  const int n = 100, reps = 5000;
  for (double beta : {0.1, 0.2}) {
    Rng rng(101 + static_cast<int>(beta * 10));
    CalibrationSet calib;
    calib.nonconformity_scores.resize(n);
    int covered = 0;
    for (int rep = 0; rep < reps; ++rep) {
      for (auto& s : calib.nonconformity_scores) s = rng.normal();
      const auto thr = conformal_threshold(calib, {beta});
      covered += thr.is_include_all() || rng.normal() <= thr.value;
    }
    const double coverage = static_cast<double>(covered) / reps;
    const double lo = (1.0 - beta) - 0.01;
    const double hi = (1.0 - beta) + 1.0 / (n + 1.0) + 0.01;
    c.check(coverage >= lo && coverage <= hi,
            "beta=" + num(beta) + ": coverage " + num(coverage) + " in [" + num(lo) + ", " +
                num(hi) + "] over " + std::to_string(reps) + " trials");
  }
  c.finish(10.0);
}

// ---------------------------------------------------------------------------
// 2. power control: matched coverage, power gain, interference budget
// ---------------------------------------------------------------------------
void criterion_2() {
  Criterion c(2, "power control: multi-sample score >= 1.1x power at equal coverage, "
                 "interference within budget");
  const Config cfg = shipped("power_control.ini");
  RunOptions options;
  options.seed = 1;
  options.trials = 50;
  options.workers = 2;
  options.out_dir = out_dir("power").string();
  const RunReport report = run_power_control(cfg, options);

  const double cov_uni = report.aggregate("coverage_unimodal").value;
  const double cov_multi = report.aggregate("coverage_multisample").value;
  c.check(std::abs(cov_uni - cov_multi) <= 0.01,
          "realized coverage unimodal " + num(cov_uni) + " vs multisample " + num(cov_multi) +
              " within 0.01");
  const double p_uni = report.aggregate("mean_power_unimodal").value;
  const double p_multi = report.aggregate("mean_power_multisample").value;
  c.check(p_multi >= 1.1 * p_uni,
          "mean power multisample " + num(p_multi) + " >= 1.1 * " + num(p_uni) + " unimodal");
  const double alpha = cfg.get_f64("calibration", "alpha");
  for (const char* side : {"unimodal", "multisample"}) {
    const auto& agg = report.aggregate(std::string("mean_interference_") + side);
    c.check(agg.value <= alpha + 2.0 * agg.se,
            std::string("mean interference ") + side + " " + num(agg.value) +
                " <= alpha + 2se = " + num(alpha + 2.0 * agg.se) + " (50 seeds)");
  }
  c.finish(60.0);
}

// ---------------------------------------------------------------------------
// 3. family-wise error rate for all three procedures
// ---------------------------------------------------------------------------
void criterion_3() {
  Criterion c(3, "FWER <= beta + 0.015 for Bonferroni-LTT, fixed-sequence-LTT, aLTT");
  const double alpha = 0.4, beta = 0.1;
  const int runs = 2000, num_candidates = 10, n_per = 60;
  std::vector<double> mu(num_candidates);
  for (int i = 0; i < num_candidates; ++i) mu[i] = i < 5 ? alpha + 0.1 : alpha - 0.1;
  CandidateGrid grid;
  std::vector<std::size_t> priority;  // safe candidates first, fixed ordering
  for (int i = 0; i < num_candidates; ++i) {
    grid.candidates.push_back({static_cast<double>(i)});
    priority.push_back(static_cast<std::size_t>(num_candidates - 1 - i));
  }
  int false_bonf = 0, false_seq = 0, false_altt = 0;
  Rng rng(303);
  for (int run = 0; run < runs; ++run) {
    std::vector<double> pvalues(num_candidates);
    for (int i = 0; i < num_candidates; ++i) {
      int sum = 0;
      for (int k = 0; k < n_per; ++k) sum += rng.bernoulli(mu[i]);
      pvalues[i] = hb_pvalue(n_per, static_cast<double>(sum) / n_per, alpha);
    }
    auto any_violating = [&](const std::vector<std::size_t>& discovered, bool reorder) {
      for (std::size_t idx : discovered)
        if (mu[reorder ? priority[idx] : idx] > alpha) return true;
      return false;
    };
    false_bonf += any_violating(bonferroni_ltt(pvalues, beta).discovered, false);
    std::vector<double> ordered(num_candidates);
    for (int i = 0; i < num_candidates; ++i) ordered[i] = pvalues[priority[i]];
    false_seq += any_violating(fixed_sequence_ltt(ordered, beta).discovered, true);
    const LossSource source = [&](std::size_t cand, long) {
      return rng.bernoulli(mu[cand]) ? 1.0 : 0.0;
    };
    AlttOptions altt;
    altt.budget = 200 + static_cast<long>(rng.uniform_int(600));  // randomized stopping
    false_altt += any_violating(altt_run(source, grid, {alpha, beta}, altt).discovered, false);
  }
  const double tol = beta + 0.015;
  c.check(static_cast<double>(false_bonf) / runs <= tol,
          "Bonferroni-LTT FWER " + num(static_cast<double>(false_bonf) / runs) + " <= " + num(tol));
  c.check(static_cast<double>(false_seq) / runs <= tol,
          "fixed-sequence-LTT FWER " + num(static_cast<double>(false_seq) / runs) + " <= " +
              num(tol));
  c.check(static_cast<double>(false_altt) / runs <= tol,
          "aLTT (randomized budgets) FWER " + num(static_cast<double>(false_altt) / runs) +
              " <= " + num(tol));
  c.finish(120.0);
}

// ---------------------------------------------------------------------------
// 4. aLTT efficiency against LTT at matched budget
// ---------------------------------------------------------------------------
void criterion_4() {
  Criterion c(4, "aLTT selected E-D <= LTT on >= 80% of seeds; some target only aLTT reaches");
  const Config cfg = shipped("hyperparam.ini");
  RunOptions options;
  options.seed = 1;
  options.trials = 200;
  options.workers = 2;
  options.out_dir = out_dir("hyperparam").string();
  run_hyperparam(cfg, options);

  const CsvTable trace = read_csv_file((fs::path(options.out_dir) / "trace.csv").string());
  const std::size_t col_trial = trace.column_index("trial");
  const std::size_t col_target = trace.column_index("target_slots");
  const std::size_t col_method = trace.column_index("method");
  const std::size_t col_disc = trace.column_index("discoveries");
  const std::size_t col_ed = trace.column_index("selected_ed_ref");

  struct Pair {
    double ltt_ed = std::numeric_limits<double>::infinity();
    double altt_ed = std::numeric_limits<double>::infinity();
    long ltt_disc = 0, altt_disc = 0;
  };
  std::map<std::pair<std::string, std::string>, Pair> pairs;
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    auto& p = pairs[{trace.rows[r][col_trial], trace.rows[r][col_target]}];
    if (trace.rows[r][col_method] == "ltt") {
      p.ltt_ed = trace.f64(r, col_ed);
      p.ltt_disc = static_cast<long>(trace.f64(r, col_disc));
    } else {
      p.altt_ed = trace.f64(r, col_ed);
      p.altt_disc = static_cast<long>(trace.f64(r, col_disc));
    }
  }
  long wins = 0;
  std::map<std::string, std::pair<long, long>> per_target;  // (ltt discovery total, altt >= 1)
  for (const auto& [key, p] : pairs) {
    wins += p.altt_ed <= p.ltt_ed;
    auto& t = per_target[key.second];
    t.first += p.ltt_disc;
    t.second += p.altt_disc >= 1;
  }
  const double win_fraction = static_cast<double>(wins) / static_cast<double>(pairs.size());
  c.check(win_fraction >= 0.8, "aLTT E-D <= LTT on " + num(win_fraction) + " of " +
                                   std::to_string(pairs.size()) +
                                   " (seed,target) pairs at matched budget, need >= 0.8");
  bool gap = false;
  std::string gap_target;
  for (const auto& [target, t] : per_target) {
    if (t.first == 0 && 2 * t.second >= options.trials) {
      gap = true;
      gap_target = target;
      break;
    }
  }
  c.check(gap, gap ? "target " + gap_target +
                         " slots: LTT discovers nothing on all 200 seeds, aLTT >= 1 on most"
                   : "no latency target separates the methods");
  c.finish(300.0);
}

// ---------------------------------------------------------------------------
// 5. exact telescoping identity
// ---------------------------------------------------------------------------
void criterion_5() {
  Criterion c(5, "telescoping identity |sum(R-alpha) - (l1-lT1)/eta| < 1e-8");
  Rng rng(505);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    OnlineThreshold state;
    state.lambda = rng.uniform(-1.0, 1.0);
    state.eta = rng.uniform(0.01, 0.5);
    state.alpha = rng.uniform(0.05, 0.5);
    const double lambda_1 = state.lambda;
    double risk_sum = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const double risk = rng.uniform01();
      risk_sum += risk - state.alpha;
      ocp_update(state, risk);
    }
    worst = std::max(worst, std::abs(risk_sum - (lambda_1 - state.lambda) / state.eta));
  }
  c.check(worst < 1e-8,
          "worst deviation " + num(worst) + " over 100 random sequences, T=1000, constant eta");
  c.finish(1.0);
}

// ---------------------------------------------------------------------------
// 6. beam selection at alpha=0.1, T=10000
// ---------------------------------------------------------------------------
void criterion_6() {
  Criterion c(6, "beam: cumulative SNR degradation within 0.01 of alpha, localized sets smaller");
  const Config cfg = shipped("beam.ini");
  RunOptions options;
  options.seed = 1;
  options.trials = 1;
  options.workers = 1;
  options.out_dir = out_dir("beam").string();
  const RunReport report = run_beam(cfg, options);
  const double alpha = cfg.get_f64("calibration", "alpha");
  const double risk_g = report.aggregate("cumulative_risk_global").value;
  const double risk_l = report.aggregate("cumulative_risk_local").value;
  c.check(std::abs(risk_g - alpha) <= 0.01,
          "global cumulative risk " + num(risk_g) + " within 0.01 of alpha=" + num(alpha) +
              " at T=10000");
  c.check(std::abs(risk_l - alpha) <= 0.01,
          "localized cumulative risk " + num(risk_l) + " within 0.01 of alpha=" + num(alpha));
  const double set_g = report.aggregate("mean_set_size_global").value;
  const double set_l = report.aggregate("mean_set_size_local").value;
  c.check(set_l < set_g, "localized mean set size " + num(set_l) + " strictly below global " +
                             num(set_g));
  c.finish(60.0);
}

// ---------------------------------------------------------------------------
// 7. counterfactual coverage vs the naive baseline
// ---------------------------------------------------------------------------
void criterion_7() {
  Criterion c(7, "counterfactual coverage >= 0.885, naive coverage <= 0.88 at beta=0.1");
  const Config cfg = shipped("counterfactual.ini");
  RunOptions options;
  options.seed = 1;
  options.trials = 2;
  options.workers = 2;
  options.out_dir = out_dir("counterfactual").string();
  const RunReport report = run_counterfactual(cfg, options);
  const double cf = report.aggregate("coverage_counterfactual").value;
  const double naive = report.aggregate("coverage_naive").value;
  const long queries = cfg.get_i64("analysis", "query_contexts") * options.trials;
  c.check(cf >= 0.9 - 0.015, "weighted coverage " + num(cf) + " >= 0.885 over " +
                                 std::to_string(queries) + " held-out contexts");
  c.check(naive <= 0.88, "naive coverage " + num(naive) + " <= 0.88 (context-dependent policy)");
  c.finish(120.0);
}

// ---------------------------------------------------------------------------
// 8. oracle equivalences
// ---------------------------------------------------------------------------

// independent brute-force HB oracle: binomial CDF via lgamma term summation
double oracle_hb(long n, double r_hat, double alpha) {
  double kl = 0.0;
  const double p = std::min(r_hat, alpha);
  if (p > 0.0) kl += p * std::log(p / alpha);
  if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - alpha));
  const double p_h = std::exp(-static_cast<double>(n) * kl);
  const long k = static_cast<long>(std::ceil(static_cast<double>(n) * r_hat - 1e-9));
  double cdf = 0.0;
  for (long i = 0; i <= std::min(k, n); ++i) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                            std::lgamma(n - i + 1.0) + i * std::log(alpha) +
                            (n - i) * std::log1p(-alpha);
    cdf += std::exp(log_term);
  }
  const double p_b = std::exp(1.0) * std::min(cdf, 1.0);
  return std::min({1.0, p_h, p_b});
}

void criterion_8() {
  Criterion c(8, "oracle equivalences: weighted==unweighted threshold, HB vs brute force");
  Rng rng(808);
  bool all_equal = true;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng.uniform_int(80);
    WeightedCalibSet weighted;
    CalibrationSet plain;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = rng.normal();
      weighted.nonconformity_scores.push_back(s);
      weighted.weights.push_back(1.0);
      plain.nonconformity_scores.push_back(s);
    }
    const double beta = rng.uniform(0.02, 0.98);
    const auto a = weighted_conformal_threshold(weighted, 1.0, beta);
    const auto b = conformal_threshold(plain, {beta});
    if (a.is_include_all() != b.is_include_all() ||
        (!a.is_include_all() && a.value != b.value)) {
      all_equal = false;
      break;
    }
  }
  c.check(all_equal, "equal-weight threshold matches conformal_threshold exactly on 1000 "
                     "random instances");

  double worst = 0.0;
  int points = 0;
  for (long n : {1L, 2L, 5L, 10L, 25L, 50L, 100L, 250L, 500L, 1000L}) {
    for (double r_hat : {0.0, 0.04, 0.1, 0.3, 0.7}) {
      worst = std::max(worst, std::abs(hb_pvalue(n, r_hat, 0.2) - oracle_hb(n, r_hat, 0.2)));
      ++points;
    }
  }
  c.check(worst < 1e-10, "hb_pvalue matches the brute-force oracle to " + num(worst) + " on a " +
                             std::to_string(points) + "-point grid");
  c.finish(30.0);
}

// ---------------------------------------------------------------------------
// 9. byte-identical reruns of every subcommand
// ---------------------------------------------------------------------------
std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_9() {
  Criterion c(9, "reproducibility: identical config+seed gives byte-identical CSVs");
  const std::string cli = CONCAL_CLI_BIN;
  struct Run {
    const char* subcommand;
    const char* config;
    const char* trials;
  };
  const std::vector<Run> runs = {{"power_control", "power_control.ini", "4"},
                                 {"hyperparam", "hyperparam.ini", "2"},
                                 {"beam", "beam.ini", "1"},
                                 {"counterfactual", "counterfactual.ini", "1"}};
  for (const Run& run : runs) {
    const fs::path dir_a = out_dir(std::string("repro_a_") + run.subcommand);
    const fs::path dir_b = out_dir(std::string("repro_b_") + run.subcommand);
    bool exec_ok = true;
    for (const auto& [dir, workers] : {std::pair{dir_a, "1"}, std::pair{dir_b, "2"}}) {
      const std::string cmd = cli + " " + run.subcommand + " --config " + CONCAL_CONFIG_DIR +
                              "/" + run.config + " --out " + dir.string() +
                              " --seed 11 --trials " + run.trials + " --workers " + workers +
                              " > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      // 0 = all targets met, 3 = statistical target missed at smoke scale;
      // both leave complete outputs
      if (rc != 0 && WEXITSTATUS(rc) != 3) exec_ok = false;
    }
    const bool same = exec_ok && read_file(dir_a / "trace.csv") == read_file(dir_b / "trace.csv") &&
                      !read_file(dir_a / "trace.csv").empty() &&
                      read_file(dir_a / "aggregate.json") == read_file(dir_b / "aggregate.json");
    c.check(same, std::string(run.subcommand) + ": two runs byte-identical (and worker-count "
                                                "independent)");
  }
  c.finish(180.0);
}

}  // namespace

int main() {
  std::printf("conformal-cal acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures == 0) {
    std::printf("acceptance: all criteria PASS\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
