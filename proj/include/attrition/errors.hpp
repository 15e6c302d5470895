#pragma once

#include <stdexcept>
#include <string>

namespace attrition {

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError -> 2, DataError (and subclasses) -> 3, anything else -> 4.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header/schema mismatch or an ill-formed schema document.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

/// A cell that cannot be parsed; carries 1-based data-row and column coordinates.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : DataError(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// A value that parses but violates a declared constraint.
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace attrition
