#pragma once
#include <stdexcept>
#include <string>

namespace sdr {

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the population generator when no admissible model was found.
struct ConstructionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Restricted Fisher operator is singular on the tangent space.
struct DegenerateModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sdr
