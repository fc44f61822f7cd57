#pragma once

// Internal helpers for the line-oriented text formats (CSV, MSH).

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stgen/error.hpp"

namespace stgen::detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Splits text into lines, dropping the trailing '\r' of CRLF files.
std::vector<std::string_view> split_lines(std::string_view text);

/// Whitespace-separated tokens.
std::vector<std::string_view> split_ws(std::string_view line);

/// One CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line);

/// CSV field quoting for writing: quotes only when needed.
std::string csv_field(std::string_view s);

double parse_double(std::string_view tok, std::string_view what);
long long parse_int(std::string_view tok, std::string_view what);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

/// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

}  // namespace stgen::detail
