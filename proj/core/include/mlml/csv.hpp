#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlml {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 17 significant digits; round-trips every finite double.
std::string format_double(double value);

/// Writes to a sibling temporary file and renames it over `path`.
void atomic_write_file(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
};

/// Minimal comma-separated reader: no quoting, first line is the header.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace mlml
