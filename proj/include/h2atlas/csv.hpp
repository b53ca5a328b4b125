#pragma once
// Minimal comma-separated table reader shared by the file-based inputs.
// No quoting support: none of the input formats carry commas in fields.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace h2atlas::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ParseError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

/// Strict double parse: the whole field must be consumed.
double to_double(std::string_view field, std::string_view what);

std::string read_file(const std::filesystem::path& path);

}  // namespace h2atlas::csv
