#include "concal/harness/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace concal {

bool RunReport::all_targets_pass() const {
  for (const auto& t : targets)
    if (!t.pass) return false;
  return true;
}

const AggregateStat& RunReport::aggregate(const std::string& name) const {
  for (const auto& a : aggregates)
    if (a.name == name) return a;
  throw std::runtime_error("RunReport: no aggregate named " + name);
}

double recompute_aggregate(const CsvTable& trace, const AggregateStat& stat) {
  const std::size_t col = trace.column_index(stat.column);
  const bool filtered = !stat.filter_column.empty();
  const std::size_t fcol = filtered ? trace.column_index(stat.filter_column) : 0;

  if (stat.stat == "mean_over_rows") {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < trace.rows.size(); ++r) {
      if (filtered && trace.rows[r][fcol] != stat.filter_value) continue;
      sum += trace.f64(r, col);
      ++count;
    }
    if (count == 0) throw std::runtime_error("recompute_aggregate: no rows for " + stat.name);
    return sum / static_cast<double>(count);
  }
  if (stat.stat == "mean_of_trial_means") {
    const std::size_t tcol = trace.column_index("trial");
    std::map<std::string, std::pair<double, std::size_t>> groups;
    for (std::size_t r = 0; r < trace.rows.size(); ++r) {
      if (filtered && trace.rows[r][fcol] != stat.filter_value) continue;
      auto& g = groups[trace.rows[r][tcol]];
      g.first += trace.f64(r, col);
      g.second += 1;
    }
    if (groups.empty()) throw std::runtime_error("recompute_aggregate: no rows for " + stat.name);
    double sum = 0.0;
    for (const auto& [key, g] : groups) sum += g.first / static_cast<double>(g.second);
    return sum / static_cast<double>(groups.size());
  }
  throw std::runtime_error("recompute_aggregate: unknown stat " + stat.stat);
}

std::string report_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["version"] = report.version;
  j["seed"] = report.seed;
  j["trials"] = report.trials;
  j["config_hash"] = report.config_hash;
  j["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : report.aggregates) {
    nlohmann::ordered_json ja;
    ja["name"] = a.name;
    ja["column"] = a.column;
    ja["stat"] = a.stat;
    if (!a.filter_column.empty()) {
      ja["filter_column"] = a.filter_column;
      ja["filter_value"] = a.filter_value;
    }
    ja["value"] = a.value;
    if (a.se >= 0.0) ja["se"] = a.se;
    j["aggregates"].push_back(ja);
  }
  j["targets"] = nlohmann::ordered_json::array();
  for (const auto& t : report.targets) {
    nlohmann::ordered_json jt;
    jt["name"] = t.name;
    jt["pass"] = t.pass;
    jt["detail"] = t.detail;
    j["targets"].push_back(jt);
  }
  j["all_targets_pass"] = report.all_targets_pass();
  return j.dump(2) + "\n";
}

std::string report_text(const RunReport& report) {
  std::ostringstream out;
  out << "conformal-cal run report\n";
  out << "experiment:  " << report.experiment << '\n';
  out << "version:     " << report.version << '\n';
  out << "seed:        " << report.seed << '\n';
  out << "trials:      " << report.trials << '\n';
  out << "config_hash: " << report.config_hash << '\n';
  out << '\n' << "aggregates:\n";
  for (const auto& a : report.aggregates) {
    out << "  " << a.name << " = " << fmt_f64(a.value);
    if (a.se >= 0.0) out << " (se " << fmt_f64(a.se) << ")";
    out << '\n';
  }
  out << '\n' << "targets:\n";
  for (const auto& t : report.targets) {
    out << "  " << (t.pass ? "PASS" : "FAIL") << ' ' << t.name << ": " << t.detail << '\n';
  }
  out << '\n' << "result: " << (report.all_targets_pass() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

void write_run_outputs(const std::string& out_dir, const RunReport& report,
                       const CsvWriter& trace) {
  std::filesystem::create_directories(out_dir);
  trace.write_file(out_dir + "/trace.csv");
  std::ofstream json_out(out_dir + "/aggregate.json", std::ios::binary);
  if (!json_out) throw std::runtime_error("write_run_outputs: cannot open aggregate.json");
  json_out << report_json(report);
  std::ofstream txt_out(out_dir + "/report.txt", std::ios::binary);
  if (!txt_out) throw std::runtime_error("write_run_outputs: cannot open report.txt");
  txt_out << report_text(report);
}

}  // namespace concal
