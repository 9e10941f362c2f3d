#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "concal/common.hpp"

namespace concal {

enum class StepSchedule {
  kConstant,  // eta_t = eta; yields the exact telescoping identity
  kInvSqrt,   // eta_t = eta / sqrt(t); weakens the identity to an inequality
};

struct TracePoint {
  long t = 0;
  double lambda = 0.0;
  double risk = 0.0;
};

struct SkipRecord {
  long t = 0;
  std::string reason;
};

// Global deployment-time threshold with update
//   lambda_{t+1} = lambda_t - eta_t * (R_t - alpha)
// No clipping is applied, so the telescoping identity
//   sum_t (R_t - alpha) = (lambda_1 - lambda_{T+1}) / eta
// holds exactly under the constant schedule.
struct OnlineThreshold {
  double lambda = 0.0;
  double eta = 0.1;
  double alpha = 0.1;
  long t = 0;  // updates applied
  StepSchedule schedule = StepSchedule::kConstant;
  bool record_history = false;
  std::vector<TracePoint> history;
  std::vector<SkipRecord> skip_log;

  void validate() const;
};

void ocp_update(OnlineThreshold& state, double risk);

using FeatureFn = std::function<std::vector<double>(std::span<const double>)>;

struct FeatureMap {
  FeatureFn fn;
  std::size_t dim = 0;

  std::vector<double> operator()(std::span<const double> x) const;
};

// phi(x) = one-hot over bins, bin index read from x[0].
FeatureMap one_hot_bins(std::size_t num_bins);

// phi_j(x) = exp(-(x[0]-centers[j])^2 / (2*width^2)); bounded in (0,1].
FeatureMap rbf_features(std::vector<double> centers, double width);

// Input-dependent threshold lambda_t(x) = <theta_t, phi(x)>. With one-hot
// features this decomposes into independent per-bin global updates.
struct LocalizedThreshold {
  std::vector<double> theta;
  FeatureMap phi;
  double eta = 0.1;
  double alpha = 0.1;
  long t = 0;
  StepSchedule schedule = StepSchedule::kConstant;
  std::vector<SkipRecord> skip_log;

  void validate() const;
};

double locp_threshold(const LocalizedThreshold& state, std::span<const double> x);

// theta' = theta - eta_t * (R_t - alpha) * phi(x)
void locp_update(LocalizedThreshold& state, std::span<const double> x, double risk);

struct LongRunRisk {
  double average = 0.0;    // (1/T) * sum_t R_t
  double deviation = 0.0;  // average - alpha
};

LongRunRisk long_run_risk(std::span<const double> risks, double alpha);

// Missing-feedback round: state unchanged, audit record appended.
void skip_round(OnlineThreshold& state, std::string reason);
void skip_round(LocalizedThreshold& state, std::string reason);

// Flat key-value snapshots for checkpoint/restore across harness runs.
// Doubles round-trip exactly.
std::map<std::string, std::string> snapshot(const OnlineThreshold& state);
std::map<std::string, std::string> snapshot(const LocalizedThreshold& state);
OnlineThreshold restore_online_threshold(const std::map<std::string, std::string>& kv);
// phi is behavior, not data; the caller supplies it on restore.
LocalizedThreshold restore_localized_threshold(const std::map<std::string, std::string>& kv,
                                               FeatureMap phi);

}  // namespace concal
