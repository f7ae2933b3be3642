#pragma once

#include <stdexcept>
#include <string>

namespace aqg {

// Data-level failures (bad files, schema violations, contract breaches).
// The CLI maps these to exit code 2; usage errors stay with CLI11 (exit 1).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct SchemaError : DataError {
  using DataError::DataError;
};

struct ConfigError : DataError {
  using DataError::DataError;
};

struct InputError : DataError {
  using DataError::DataError;
};

struct IoError : DataError {
  using DataError::DataError;
};

struct NumericError : DataError {
  using DataError::DataError;
};

struct AlignmentError : DataError {
  using DataError::DataError;
};

}  // namespace aqg
