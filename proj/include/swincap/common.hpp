#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace swincap {

// Error taxonomy. The CLI maps these onto exit codes: config errors exit 2,
// I/O errors exit 1, numeric failures exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shapes that cannot be combined (inner dims, channel mismatch, ...).
struct ShapeError : Error {
  using Error::Error;
};

// Invalid hyperparameters or malformed config text.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// NaN losses, double backward, internal consistency failures.
struct NumericError : Error {
  using Error::Error;
};

using i64 = std::int64_t;
using u64 = std::uint64_t;

}  // namespace swincap
