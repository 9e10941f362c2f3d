#include "concal/counterfactual.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace concal {

void LoggedEpisode::validate() const {
  CONCAL_REQUIRE(propensity > 0.0 && propensity <= 1.0,
                 "LoggedEpisode: propensity must be in (0,1]");
  CONCAL_REQUIRE(std::isfinite(kpi), "LoggedEpisode: non-finite KPI");
}

void WeightedCalibSet::validate() const {
  if (nonconformity_scores.empty())
    throw InsufficientData("WeightedCalibSet: empty calibration set");
  CONCAL_REQUIRE(nonconformity_scores.size() == weights.size(),
                 "WeightedCalibSet: score/weight length mismatch");
  for (double w : weights)
    CONCAL_REQUIRE(std::isfinite(w) && w > 0.0, "WeightedCalibSet: weights must be positive");
  for (double s : nonconformity_scores)
    CONCAL_REQUIRE(std::isfinite(s), "WeightedCalibSet: non-finite score");
}

double counterfactual_weight(double pi_target_action, double clip) {
  CONCAL_REQUIRE(pi_target_action > 0.0 && pi_target_action <= 1.0,
                 "counterfactual_weight: propensity must be in (0,1]");
  CONCAL_REQUIRE(clip > 0.0, "counterfactual_weight: clip must be positive");
  return std::min((1.0 - pi_target_action) / pi_target_action, clip);
}

SortedWeightedCalib SortedWeightedCalib::from(const WeightedCalibSet& calib) {
  calib.validate();
  const std::size_t n = calib.nonconformity_scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return calib.nonconformity_scores[a] < calib.nonconformity_scores[b];
  });
  SortedWeightedCalib sorted;
  sorted.scores.reserve(n);
  sorted.weights.reserve(n);
  for (std::size_t idx : order) {
    sorted.scores.push_back(calib.nonconformity_scores[idx]);
    sorted.weights.push_back(calib.weights[idx]);
    sorted.total_weight += calib.weights[idx];
  }
  return sorted;
}

ConformalThreshold weighted_threshold_presorted(const SortedWeightedCalib& calib,
                                                double test_weight, double beta) {
  CONCAL_REQUIRE(test_weight > 0.0 && std::isfinite(test_weight),
                 "weighted_conformal_threshold: test weight must be positive");
  CONCAL_REQUIRE(beta > 0.0 && beta < 1.0, "weighted_conformal_threshold: beta must be in (0,1)");
  const std::size_t n = calib.scores.size();
  const double target = (1.0 - beta) * (calib.total_weight + test_weight);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = calib.scores[i];
    cumulative += calib.weights[i];
    // fold tied scores into one mass point
    while (i + 1 < n && calib.scores[i + 1] == s) {
      ++i;
      cumulative += calib.weights[i];
    }
    if (cumulative >= target) return ConformalThreshold::finite(s);
  }
  return ConformalThreshold::include_all();
}

ConformalThreshold weighted_conformal_threshold(const WeightedCalibSet& calib, double test_weight,
                                                double beta) {
  return weighted_threshold_presorted(SortedWeightedCalib::from(calib), test_weight, beta);
}

namespace {

KpiInterval interval_impl(int target_action, std::span<const double> query_context,
                          std::span<const LoggedEpisode> log, const KpiPredictor& predictor,
                          double test_weight, double clip, double beta,
                          std::pair<double, double> kpi_range, bool weighted) {
  WeightedCalibSet calib;
  for (const auto& ep : log) {
    if (ep.action != target_action) continue;
    ep.validate();
    calib.nonconformity_scores.push_back(std::abs(ep.kpi - predictor(ep.context)));
    calib.weights.push_back(weighted ? counterfactual_weight(ep.propensity, clip) : 1.0);
  }
  if (calib.nonconformity_scores.empty())
    throw InsufficientData("counterfactual interval: no logged episodes with the target action");

  const ConformalThreshold thr = weighted_conformal_threshold(calib, test_weight, beta);
  if (thr.is_include_all()) return {kpi_range.first, kpi_range.second, true};
  const double center = predictor(query_context);
  return {center - thr.value, center + thr.value, false};
}

}  // namespace

KpiInterval counterfactual_interval(int target_action, std::span<const double> query_context,
                                    std::span<const LoggedEpisode> log,
                                    const KpiPredictor& predictor,
                                    const PropensityFn& propensity, double beta, double clip,
                                    std::pair<double, double> kpi_range) {
  const double test_weight = counterfactual_weight(propensity(query_context), clip);
  return interval_impl(target_action, query_context, log, predictor, test_weight, clip, beta,
                       kpi_range, /*weighted=*/true);
}

KpiInterval naive_interval(int target_action, std::span<const double> query_context,
                           std::span<const LoggedEpisode> log, const KpiPredictor& predictor,
                           double beta, std::pair<double, double> kpi_range) {
  return interval_impl(target_action, query_context, log, predictor, /*test_weight=*/1.0,
                       /*clip=*/1.0, beta, kpi_range, /*weighted=*/false);
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<LoggedEpisode> parse_episode_log(const std::string& csv_text) {
  std::vector<LoggedEpisode> episodes;
  std::istringstream in(csv_text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.find("episode_id") != std::string::npos) continue;
    }
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    CONCAL_REQUIRE(cells.size() >= 4, "episode log: malformed row");
    LoggedEpisode ep;
    // episode_id, context..., action, propensity, kpi
    for (std::size_t i = 1; i < cells.size() - 3; ++i) ep.context.push_back(std::stod(cells[i]));
    ep.action = std::stoi(cells[cells.size() - 3]);
    ep.propensity = std::stod(cells[cells.size() - 2]);
    ep.kpi = std::stod(cells[cells.size() - 1]);
    ep.validate();
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

std::string format_episode_log(std::span<const LoggedEpisode> episodes) {
  std::ostringstream out;
  std::size_t ctx_dim = episodes.empty() ? 0 : episodes.front().context.size();
  out << "# schema=episode_log v1\n";
  out << "episode_id";
  for (std::size_t i = 0; i < ctx_dim; ++i) out << ",x" << i;
  out << ",action,propensity,kpi\n";
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    out << e;
    for (double v : episodes[e].context) out << ',' << fmt_double(v);
    out << ',' << episodes[e].action << ',' << fmt_double(episodes[e].propensity) << ','
        << fmt_double(episodes[e].kpi) << '\n';
  }
  return out.str();
}

}  // namespace concal
