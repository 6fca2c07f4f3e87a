#pragma once

#include <stdexcept>
#include <string>

namespace tokenweight {

/// Raised when caller-supplied data violates a documented contract
/// (bad lexicon line, shape mismatch, out-of-range span, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a computation cannot complete (e.g. training diverged).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tokenweight
