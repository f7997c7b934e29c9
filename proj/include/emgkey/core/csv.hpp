#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace emgkey::csv {

/// Whole file as bytes; DataError if it cannot be opened.
std::string read_text(const std::filesystem::path& path);

/// Replaces the file; DataError if it cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

std::vector<std::string_view> split(std::string_view line, char sep);

/// Lines without the trailing LF or CRLF; a final empty line is dropped.
std::vector<std::string_view> lines_of(std::string_view text);

/// Strict decimal parse of the whole field; the error names file and line.
double parse_double(std::string_view field, const std::filesystem::path& file, std::size_t line);

/// Shortest text that parses back to exactly v.
std::string format_double(double v);

/// Throws DataError unless `line` equals the comma-joined header.
void check_header(std::string_view line, const std::vector<std::string>& expected,
                  const std::filesystem::path& file);

std::string join(const std::vector<std::string>& fields, char sep = ',');

/// A numeric table whose first column is a strictly increasing time.
struct Table {
  std::vector<double> t;
  std::vector<std::vector<double>> cols;  ///< one vector per non-time column
};

Table read_numeric(const std::filesystem::path& file, const std::vector<std::string>& header);

}  // namespace emgkey::csv
