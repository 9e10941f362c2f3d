#include "concal/online.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "concal/kernels.hpp"

namespace concal {

namespace {

double step_size(double eta, StepSchedule schedule, long t_next) {
  if (schedule == StepSchedule::kInvSqrt) return eta / std::sqrt(static_cast<double>(t_next));
  return eta;
}

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  CONCAL_REQUIRE(it != kv.end(), "snapshot restore: missing key " + key);
  return std::stod(it->second);
}

}  // namespace

void OnlineThreshold::validate() const {
  CONCAL_REQUIRE(eta > 0.0, "OnlineThreshold: eta must be > 0");
  CONCAL_REQUIRE(std::isfinite(lambda), "OnlineThreshold: non-finite lambda");
  for (std::size_t i = 1; i < history.size(); ++i)
    CONCAL_REQUIRE(history[i].t > history[i - 1].t,
                   "OnlineThreshold: trace timestamps must be strictly increasing");
}

void ocp_update(OnlineThreshold& state, double risk) {
  CONCAL_REQUIRE(std::isfinite(risk), "ocp_update: non-finite risk");
  CONCAL_REQUIRE(state.eta > 0.0, "ocp_update: eta must be > 0");
  state.t += 1;
  const double eta_t = step_size(state.eta, state.schedule, state.t);
  state.lambda -= eta_t * (risk - state.alpha);
  if (state.record_history) state.history.push_back({state.t, state.lambda, risk});
}

std::vector<double> FeatureMap::operator()(std::span<const double> x) const {
  std::vector<double> phi = fn(x);
  CONCAL_REQUIRE(phi.size() == dim, "FeatureMap: feature dimension mismatch");
  for (double v : phi) CONCAL_REQUIRE(std::isfinite(v), "FeatureMap: non-finite feature");
  return phi;
}

FeatureMap one_hot_bins(std::size_t num_bins) {
  CONCAL_REQUIRE(num_bins >= 1, "one_hot_bins: need at least one bin");
  FeatureMap map;
  map.dim = num_bins;
  map.fn = [num_bins](std::span<const double> x) {
    CONCAL_REQUIRE(!x.empty(), "one_hot_bins: empty context");
    const auto bin = static_cast<long>(x[0]);
    CONCAL_REQUIRE(bin >= 0 && static_cast<std::size_t>(bin) < num_bins,
                   "one_hot_bins: bin index out of range");
    std::vector<double> phi(num_bins, 0.0);
    phi[static_cast<std::size_t>(bin)] = 1.0;
    return phi;
  };
  return map;
}

FeatureMap rbf_features(std::vector<double> centers, double width) {
  CONCAL_REQUIRE(!centers.empty(), "rbf_features: need at least one center");
  CONCAL_REQUIRE(width > 0.0, "rbf_features: width must be > 0");
  FeatureMap map;
  map.dim = centers.size();
  map.fn = [centers = std::move(centers), width](std::span<const double> x) {
    CONCAL_REQUIRE(!x.empty(), "rbf_features: empty context");
    std::vector<double> phi(centers.size());
    for (std::size_t j = 0; j < centers.size(); ++j) {
      const double d = x[0] - centers[j];
      phi[j] = std::exp(-(d * d) / (2.0 * width * width));
    }
    return phi;
  };
  return map;
}

void LocalizedThreshold::validate() const {
  CONCAL_REQUIRE(eta > 0.0, "LocalizedThreshold: eta must be > 0");
  CONCAL_REQUIRE(theta.size() == phi.dim, "LocalizedThreshold: theta/phi dimension mismatch");
}

double locp_threshold(const LocalizedThreshold& state, std::span<const double> x) {
  const std::vector<double> phi = state.phi(x);
  CONCAL_REQUIRE(phi.size() == state.theta.size(), "locp_threshold: dimension mismatch");
  return kernels::dot(state.theta.data(), phi.data(), phi.size());
}

void locp_update(LocalizedThreshold& state, std::span<const double> x, double risk) {
  CONCAL_REQUIRE(std::isfinite(risk), "locp_update: non-finite risk");
  const std::vector<double> phi = state.phi(x);
  CONCAL_REQUIRE(phi.size() == state.theta.size(), "locp_update: dimension mismatch");
  state.t += 1;
  const double eta_t = step_size(state.eta, state.schedule, state.t);
  kernels::axpy(state.theta.data(), phi.data(), -eta_t * (risk - state.alpha), phi.size());
}

LongRunRisk long_run_risk(std::span<const double> risks, double alpha) {
  if (risks.empty()) throw InsufficientData("long_run_risk: empty trace");
  double sum = 0.0;
  for (double r : risks) sum += r;
  const double avg = sum / static_cast<double>(risks.size());
  return {avg, avg - alpha};
}

void skip_round(OnlineThreshold& state, std::string reason) {
  state.skip_log.push_back({state.t, std::move(reason)});
}

void skip_round(LocalizedThreshold& state, std::string reason) {
  state.skip_log.push_back({state.t, std::move(reason)});
}

std::map<std::string, std::string> snapshot(const OnlineThreshold& state) {
  std::map<std::string, std::string> kv;
  kv["kind"] = "global";
  kv["lambda"] = fmt_double(state.lambda);
  kv["eta"] = fmt_double(state.eta);
  kv["alpha"] = fmt_double(state.alpha);
  kv["t"] = std::to_string(state.t);
  kv["schedule"] = state.schedule == StepSchedule::kConstant ? "constant" : "inv_sqrt";
  return kv;
}

std::map<std::string, std::string> snapshot(const LocalizedThreshold& state) {
  std::map<std::string, std::string> kv;
  kv["kind"] = "localized";
  kv["dim"] = std::to_string(state.theta.size());
  for (std::size_t i = 0; i < state.theta.size(); ++i)
    kv["theta_" + std::to_string(i)] = fmt_double(state.theta[i]);
  kv["eta"] = fmt_double(state.eta);
  kv["alpha"] = fmt_double(state.alpha);
  kv["t"] = std::to_string(state.t);
  kv["schedule"] = state.schedule == StepSchedule::kConstant ? "constant" : "inv_sqrt";
  return kv;
}

namespace {
StepSchedule parse_schedule(const std::map<std::string, std::string>& kv) {
  auto it = kv.find("schedule");
  if (it != kv.end() && it->second == "inv_sqrt") return StepSchedule::kInvSqrt;
  return StepSchedule::kConstant;
}
}  // namespace

OnlineThreshold restore_online_threshold(const std::map<std::string, std::string>& kv) {
  OnlineThreshold state;
  state.lambda = parse_double(kv, "lambda");
  state.eta = parse_double(kv, "eta");
  state.alpha = parse_double(kv, "alpha");
  state.t = std::stol(kv.at("t"));
  state.schedule = parse_schedule(kv);
  state.validate();
  return state;
}

LocalizedThreshold restore_localized_threshold(const std::map<std::string, std::string>& kv,
                                               FeatureMap phi) {
  LocalizedThreshold state;
  const auto dim = static_cast<std::size_t>(std::stoul(kv.at("dim")));
  state.theta.resize(dim);
  for (std::size_t i = 0; i < dim; ++i)
    state.theta[i] = parse_double(kv, "theta_" + std::to_string(i));
  state.eta = parse_double(kv, "eta");
  state.alpha = parse_double(kv, "alpha");
  state.t = std::stol(kv.at("t"));
  state.schedule = parse_schedule(kv);
  state.phi = std::move(phi);
  state.validate();
  return state;
}

}  // namespace concal
