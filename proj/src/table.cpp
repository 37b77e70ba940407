#include "stapdp/table.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>

#include "stapdp/errors.hpp"

namespace stapdp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Table::require_column(std::string_view name, std::string_view context) const {
  const int idx = column(name);
  if (idx < 0) fail(ErrorKind::input, std::string(context) + ": missing required column '" + std::string(name) + "'");
  return idx;
}

std::vector<std::string> split_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    const auto piece = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    fields.emplace_back(trim(piece));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

Table read_table(std::istream& in, char delimiter, std::string_view context) {
  Table table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      table.comments.emplace_back(trim(view.substr(1)));
      continue;
    }
    auto fields = split_line(view, delimiter);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(ErrorKind::input, std::string(context) + ": line " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) fail(ErrorKind::input, std::string(context) + ": missing header row");
  return table;
}

Table read_table(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::input, "cannot open " + path.string());
  return read_table(in, delimiter, path.string());
}

void write_table(std::ostream& out, const Table& table, char delimiter) {
  for (const auto& c : table.comments) out << "# " << c << '\n';
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << delimiter;
      out << row[i];
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

void write_table(const std::filesystem::path& path, const Table& table, char delimiter) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::input, "cannot write " + path.string());
  write_table(out, table, delimiter);
  if (!out) fail(ErrorKind::input, "write failed for " + path.string());
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_number(long long value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text, std::string_view context) {
  const std::string_view t = trim(text);
  double value = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    if (t == "inf" || t == "Inf") return std::numeric_limits<double>::infinity();
    fail(ErrorKind::input, std::string(context) + ": '" + std::string(t) + "' is not a number");
  }
  return value;
}

long long parse_integer(std::string_view text, std::string_view context) {
  const std::string_view t = trim(text);
  long long value = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    fail(ErrorKind::input, std::string(context) + ": '" + std::string(t) + "' is not an integer");
  }
  return value;
}

}  // namespace stapdp
