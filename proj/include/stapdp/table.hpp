#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace stapdp {

/// A header + rows delimited text table. Lines starting with '#' are
/// comments; they are skipped on read and used for provenance on write.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  // -1 when absent.
  int column(std::string_view name) const;
  int require_column(std::string_view name, std::string_view context) const;
};

Table read_table(std::istream& in, char delimiter, std::string_view context);
Table read_table(const std::filesystem::path& path, char delimiter);

void write_table(std::ostream& out, const Table& table, char delimiter);
void write_table(const std::filesystem::path& path, const Table& table, char delimiter);

/// Shortest round-trip decimal representation.
std::string format_number(double value);
std::string format_number(long long value);

double parse_number(std::string_view text, std::string_view context);
long long parse_integer(std::string_view text, std::string_view context);

std::vector<std::string> split_line(std::string_view line, char delimiter);

}  // namespace stapdp
