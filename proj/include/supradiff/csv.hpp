#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace supradiff {

/// Parsed comma-separated table. No quoting: fields never contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);

// Shortest round-trip representation ("%.17g" trimmed); locale independent.
std::string format_number(double value);
double parse_number(std::string_view field);

std::string read_text(const std::filesystem::path& path);
// Writes to a sibling temporary and renames over the target.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace supradiff
