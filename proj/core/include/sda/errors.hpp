#pragma once

#include <stdexcept>

namespace sda {

// Argument violates a documented precondition.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Matrix has an eigenvalue below the tolerated floor.
struct NotPSD : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear system is too close to singular to solve reliably.
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative routine exhausted its budget without meeting its tolerance.
struct DidNotConverge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: non-finite input or a stalled iteration.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sda
