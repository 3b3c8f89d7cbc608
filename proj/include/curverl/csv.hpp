#pragma once

#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace curverl {

/// "%.17g": 17 significant digits, enough for an exact double round-trip.
std::string format_double(double value);

/// Minimal CSV writer with a fixed header. Fields are written as given; no
/// quoting is performed, so callers must not pass commas.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(std::size_t value);
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

/// Parsed CSV table: header names plus rows of string fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws std::invalid_argument if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace curverl
