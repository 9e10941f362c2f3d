#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concal/common.hpp"

namespace concal {

// Flat structured config: "[section]" headers, "key = value" lines, '#'
// comments. Sections and keys are kept sorted so to_text() is canonical.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  double get_f64(const std::string& section, const std::string& key) const;
  double get_f64(const std::string& section, const std::string& key, double fallback) const;
  long get_i64(const std::string& section, const std::string& key) const;
  long get_i64(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  // comma-separated list of reals
  std::vector<double> get_f64_list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string to_text() const;
  // FNV-1a hash of the canonical text, as provenance
  std::uint64_t hash() const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace concal
