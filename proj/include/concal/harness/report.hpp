#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "concal/io/csv.hpp"

namespace concal {

// One reported aggregate, always recomputable from the emitted trace CSV:
//   stat = "mean_over_rows":       mean of `column` over all rows
//   stat = "mean_of_trial_means":  group rows by the `trial` column, average
//                                  per-trial means; se is the MC standard
//                                  error over trial means (sd/sqrt(trials))
// An optional filter restricts the rows considered (filter_column == filter_value).
struct AggregateStat {
  std::string name;
  std::string column;
  std::string stat;
  double value = 0.0;
  double se = -1.0;  // < 0 when not applicable
  std::string filter_column;
  std::string filter_value;
};

struct TargetCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunReport {
  std::string experiment;
  std::string version;
  std::uint64_t seed = 0;
  long trials = 0;
  int workers = 1;
  std::string config_hash;
  std::vector<AggregateStat> aggregates;
  std::vector<TargetCheck> targets;

  bool all_targets_pass() const;
  const AggregateStat& aggregate(const std::string& name) const;
};

// Recompute one aggregate from a trace table; used by report assembly and the
// report-integrity tests.
double recompute_aggregate(const CsvTable& trace, const AggregateStat& stat);

std::string report_json(const RunReport& report);
std::string report_text(const RunReport& report);

void write_run_outputs(const std::string& out_dir, const RunReport& report,
                       const CsvWriter& trace);

}  // namespace concal
