#pragma once

// Small helpers shared by the line-oriented readers and writers.

#include "ofo/error.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ofo::text {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Drops a trailing `#` comment and surrounding whitespace.
inline std::string_view strip_comment(std::string_view s) {
  if (auto pos = s.find('#'); pos != std::string_view::npos) s = s.substr(0, pos);
  return trim(s);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double to_double(std::string_view field, const std::string& source, std::size_t line, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(source, line, "invalid number '" + std::string(field) + "' for " + std::string(what));
  return value;
}

inline std::uint64_t to_uint(std::string_view field, const std::string& source, std::size_t line,
                             std::string_view what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(source, line, "invalid integer '" + std::string(field) + "' for " + std::string(what));
  return value;
}

/// Shortest decimal representation that reads back to the same double.
inline std::string format(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace ofo::text
