#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lsfm::io {

/// Shortest decimal form that round-trips to the same double.
std::string fmt(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Numeric column by header name; throws std::invalid_argument when absent.
  std::vector<double> column(std::string_view name) const;
  std::vector<std::string> text_column(std::string_view name) const;
};

/// Table from equally long numeric columns.
CsvTable numeric_table(std::vector<std::string> header,
                       const std::vector<std::vector<double>>& columns);

std::string format_csv(const CsvTable& t);
CsvTable parse_csv(std::string_view text);
void write_csv(const std::filesystem::path& path, const CsvTable& t);
CsvTable read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lsfm::io
