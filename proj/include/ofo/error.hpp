#pragma once

#include <stdexcept>
#include <string>

namespace ofo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(format(source, line, what)), source_(std::move(source)), line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line, const std::string& what) {
    if (line == 0) return source + ": " + what;
    return source + ":" + std::to_string(line) + ": " + what;
  }

  std::string source_;
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The plant (AC power flow) did not converge.
class PlantFault : public Error {
 public:
  using Error::Error;
};

/// A message crossed a non-edge of the communication graph.
class LocalityViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace ofo
