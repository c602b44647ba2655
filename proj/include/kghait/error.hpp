#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kghait {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
};

/// Base of every error thrown by the library. Carries the exit code the CLI
/// should terminate with.
class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kUsage, what) {}
};

/// Malformed or unresolvable input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

/// A triple file line that could not be parsed.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line_number, const std::string& what)
      : DataError("line " + std::to_string(line_number) + ": " + what),
        line_number_(line_number),
        detail_(what) {}

  std::size_t line_number() const noexcept { return line_number_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_number_;
  std::string detail_;
};

/// Numerical failure: NaN loss, degenerate matrices, undefined similarities.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ExitCode::kNumeric, what) {}
};

/// Raised by test oracles when the requested instance is too large to
/// enumerate.
class OracleScaleError : public Error {
 public:
  explicit OracleScaleError(const std::string& what)
      : Error(ExitCode::kUsage, what) {}
};

}  // namespace kghait
