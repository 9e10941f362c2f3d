#include "concal/io/config.hpp"

#include <fstream>
#include <sstream>

#include "concal/rng.hpp"

namespace concal {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      CONCAL_REQUIRE(t.back() == ']', "config: malformed section header at line " +
                                          std::to_string(line_no));
      section = trim(t.substr(1, t.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const std::size_t eq = t.find('=');
    CONCAL_REQUIRE(eq != std::string::npos,
                   "config: expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    CONCAL_REQUIRE(!key.empty(), "config: empty key at line " + std::to_string(line_no));
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto sec = sections_.find(section);
  return sec != sections_.end() && sec->second.count(key) > 0;
}

std::string Config::get_str(const std::string& section, const std::string& key) const {
  auto sec = sections_.find(section);
  if (sec != sections_.end()) {
    auto it = sec->second.find(key);
    if (it != sec->second.end()) return it->second;
  }
  throw std::runtime_error("config: missing [" + section + "] " + key);
}

std::string Config::get_str(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  return has(section, key) ? get_str(section, key) : fallback;
}

double Config::get_f64(const std::string& section, const std::string& key) const {
  return std::stod(get_str(section, key));
}

double Config::get_f64(const std::string& section, const std::string& key,
                       double fallback) const {
  return has(section, key) ? get_f64(section, key) : fallback;
}

long Config::get_i64(const std::string& section, const std::string& key) const {
  return std::stol(get_str(section, key));
}

long Config::get_i64(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_i64(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_str(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: non-boolean value for [" + section + "] " + key);
}

std::vector<double> Config::get_f64_list(const std::string& section,
                                         const std::string& key) const {
  const std::string v = get_str(section, key);
  std::vector<double> out;
  std::istringstream in(v);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    const std::string t = trim(cell);
    if (!t.empty()) out.push_back(std::stod(t));
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

std::string Config::to_text() const {
  std::ostringstream out;
  for (const auto& [name, entries] : sections_) {
    out << '[' << name << "]\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
  }
  return out.str();
}

std::uint64_t Config::hash() const { return fnv1a64(to_text()); }

}  // namespace concal
