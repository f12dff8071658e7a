#pragma once

#include <stdexcept>

namespace qcal {

// Malformed files, bad magic, truncated payloads, shape/name violations in
// external inputs. The CLI maps this to exit code 2.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-convergence, rank deficiency with an unregularized solve, non-finite
// training loss. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qcal
