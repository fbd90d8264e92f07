#pragma once

#include <stdexcept>
#include <string>

namespace sos {

/// Broad failure category. Each maps to one CLI exit code.
enum class ErrorCategory { Config, Data, MissingArtifact, Numeric };

int exit_code(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

// Tabular data.
class MissingColumnError : public Error {
 public:
  explicit MissingColumnError(const std::string& column)
      : Error(ErrorCategory::Data, "missing column '" + column + "'"), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class ContinuousParseError : public Error {
 public:
  ContinuousParseError(const std::string& column, const std::string& value, std::size_t line)
      : Error(ErrorCategory::Data, "column '" + column + "', line " + std::to_string(line) +
                                       ": cannot parse '" + value + "' as a finite real"),
        column_(column),
        value_(value) {}
  const std::string& column() const noexcept { return column_; }
  const std::string& value() const noexcept { return value_; }

 private:
  std::string column_;
  std::string value_;
};

class EmptyTableError : public Error {
 public:
  explicit EmptyTableError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class UnseenCategoryError : public Error {
 public:
  UnseenCategoryError(const std::string& column, const std::string& value)
      : Error(ErrorCategory::Data,
              "column '" + column + "': category '" + value + "' not in the encoder vocabulary"),
        column_(column),
        value_(value) {}
  const std::string& column() const noexcept { return column_; }
  const std::string& value() const noexcept { return value_; }

 private:
  std::string column_;
  std::string value_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

/// Oversampling needs at least two classes. Full-table synthesis does not.
class SingleClassError : public Error {
 public:
  explicit SingleClassError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

// Numerics.
class TimeOutOfRangeError : public Error {
 public:
  explicit TimeOutOfRangeError(double t)
      : Error(ErrorCategory::Numeric, "time " + std::to_string(t) + " outside [t_min, t_max]") {}
};

class DegenerateTimeError : public Error {
 public:
  explicit DegenerateTimeError(double t)
      : Error(ErrorCategory::Numeric,
              "perturbation std vanishes at t=" + std::to_string(t) + "; score undefined") {}
};

class DimensionMismatchError : public Error {
 public:
  explicit DimensionMismatchError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class StaleCacheError : public Error {
 public:
  StaleCacheError() : Error(ErrorCategory::Numeric, "backprop cache does not match the parameters") {}
};

class UnsupportedCombinationError : public Error {
 public:
  explicit UnsupportedCombinationError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class ZeroVectorError : public Error {
 public:
  ZeroVectorError() : Error(ErrorCategory::Numeric, "angle undefined for a zero vector") {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

// Persistence.
class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& what) : Error(ErrorCategory::MissingArtifact, what) {}
};

class VersionMismatchError : public Error {
 public:
  VersionMismatchError(int found, int expected)
      : Error(ErrorCategory::MissingArtifact, "model format_version " + std::to_string(found) +
                                                  " (expected " + std::to_string(expected) + ")") {}
};

class CorruptFileError : public Error {
 public:
  explicit CorruptFileError(const std::string& what) : Error(ErrorCategory::MissingArtifact, what) {}
};

}  // namespace sos
