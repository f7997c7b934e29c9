#include "emgkey/core/csv.hpp"

#include "emgkey/core/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace emgkey::csv {
namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": missing or unreadable file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  return lines;
}

double parse_double(std::string_view field, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": malformed number '" +
                    std::string(field) + "'");
  }
  return v;
}

void check_header(std::string_view line, const std::vector<std::string>& expected,
                  const fs::path& file) {
  const auto cols = split(line, ',');
  bool ok = cols.size() == expected.size();
  for (std::size_t i = 0; ok && i < cols.size(); ++i) ok = cols[i] == expected[i];
  if (!ok) throw DataError(file.string() + ":1: unexpected header '" + std::string(line) + "'");
}

Table read_numeric(const fs::path& file, const std::vector<std::string>& header) {
  const auto text = read_text(file);
  const auto lines = lines_of(text);
  if (lines.empty()) throw DataError(file.string() + ": empty file");
  check_header(lines[0], header, file);
  Table table;
  table.cols.resize(header.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split(lines[li], ',');
    if (fields.size() != header.size()) {
      throw DataError(file.string() + ":" + std::to_string(li + 1) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const double t = parse_double(fields[0], file, li + 1);
    if (!table.t.empty() && !(t > table.t.back())) {
      throw DataError(file.string() + ":" + std::to_string(li + 1) +
                      ": timestamp not strictly increasing");
    }
    table.t.push_back(t);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      table.cols[c - 1].push_back(parse_double(fields[c], file, li + 1));
    }
  }
  return table;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot write");
  out << text;
}

std::string join(const std::vector<std::string>& fields, char sep) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += sep;
    out += fields[i];
  }
  return out;
}

}  // namespace emgkey::csv
