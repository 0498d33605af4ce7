#pragma once

#include <stdexcept>
#include <string>

namespace gcr {

// Shape or size disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyDatasetError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data (dataset files, graph structure).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf produced somewhere in the numerical pipeline.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gcr
