#pragma once

#include <stdexcept>
#include <string>

namespace interseg {

/// Bad or inconsistent input data (maps to CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file lacks a required column.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

/// Geographic layer failed validation.
class LayerError : public DataError {
 public:
  using DataError::DataError;
};

/// Invalid parameters or configuration (maps to CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fit or check could not produce a trustworthy result (exit code 3).
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace interseg
