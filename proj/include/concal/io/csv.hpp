#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace concal {

// Shortest round-trip decimal representation; byte-stable for reproducible
// CSV output.
std::string fmt_f64(double v);
std::string fmt_i64(long long v);

// CSV with a "# schema=<id>" comment line, then a header row. Cells are
// pre-formatted strings.
class CsvWriter {
 public:
  CsvWriter(std::string schema_id, std::vector<std::string> columns);

  void row(std::span<const std::string> cells);
  void row(const std::vector<std::string>& cells) { row(std::span<const std::string>(cells)); }

  const std::string& text() const { return buffer_; }
  std::size_t rows() const { return rows_; }
  void write_file(const std::string& path) const;

 private:
  std::size_t num_columns_;
  std::string buffer_;
  std::size_t rows_ = 0;
};

struct CsvTable {
  std::string schema_id;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;
  double f64(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv_file(const std::string& path);

}  // namespace concal
