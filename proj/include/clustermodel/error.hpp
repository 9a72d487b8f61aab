#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cmodel {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument values: k out of range, folds < 2, imbalance outside (0,1)...
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatches between vectors, matrices and models.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Values outside an operation's domain (negative input to Jaccard, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// CSV cell that cannot be read. Row is 1-based over data rows (the header
// is not counted); column is the header name.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& what)
      : Error("row " + std::to_string(row) + ", column '" + column + "': " + what),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Quantity undefined for the given input: kappa with P(E)=1, correlation of
// a constant list, t-test on identical differences.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmodel
