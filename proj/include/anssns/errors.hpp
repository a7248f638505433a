#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anssns {

/// Invalid or inconsistent user configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ConfigError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A test or summary was requested on samples it does not apply to.
class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numerical failure (non-finite quadrature, cache drift). Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anssns
