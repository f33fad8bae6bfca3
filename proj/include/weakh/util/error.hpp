#pragma once

#include <stdexcept>
#include <string>

namespace weakh {

/// A numerical procedure failed (divergence, no orbit, degenerate input).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated preconditions are reported with std::invalid_argument.

}  // namespace weakh
