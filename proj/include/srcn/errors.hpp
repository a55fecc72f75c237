#pragma once

#include <stdexcept>
#include <string>

namespace srcn {

/// Mismatched tensor/grid dimensions or an operand outside an op's contract.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad option value, duplicate link id, malformed config file).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or insufficient data (bad record, empty dataset, corrupt checkpoint).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN/Inf detected in a forward value or gradient.
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace srcn
