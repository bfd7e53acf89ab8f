#pragma once

#include <stdexcept>

namespace smofdm {

// Inconsistent parameters or setup, detected before any processing.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input whose dimensions do not match the configured frame layout.
struct framing_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: singular solve, divergent training, non-finite values.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File format or filesystem failure.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A required artifact (weight file, manifest) does not exist.
struct missing_artifact_error : io_error {
  using io_error::io_error;
};

}  // namespace smofdm
