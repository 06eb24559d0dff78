#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace socm {

// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind {
  input,    // malformed files, bad arguments, violated preconditions
  numeric,  // degenerate data or numerical breakdown
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad magic, version, or payload kind in a dump header.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::input, what) {}
};

// Payload ends early or carries trailing garbage.
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::uint64_t offset)
      : Error(ErrorKind::input, what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::input, what) {}
};

// A record violates a value invariant (finite entries, n >= 1, row-stochastic A, ...).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::input, what) {}
};

// Matrix dimensions disagree.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

// ||mu(X)|| at or below the mean-norm floor.
class DegenerateMeanError : public NumericError {
 public:
  explicit DegenerateMeanError(const std::string& what) : NumericError(what) {}
};

// Ratio with a vanishing denominator (zero spread, zero-norm column, constant ranks).
class UndefinedRatioError : public NumericError {
 public:
  explicit UndefinedRatioError(const std::string& what) : NumericError(what) {}
};

}  // namespace socm
