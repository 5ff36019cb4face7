#pragma once

#include <stdexcept>
#include <string>

namespace keymotion {

// Error taxonomy maps onto the CLI exit codes: usage=2, validation=3, numeric=4.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/size mismatch between operands.
struct DimensionError : ValidationError {
  using ValidationError::ValidationError;
};

// Non-finite values, divergence, failed numeric checks.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace keymotion
