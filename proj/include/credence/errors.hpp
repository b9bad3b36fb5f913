#pragma once

#include <stdexcept>
#include <string>

namespace credence {

/// Numeric breakdown during inference (non-finite objective, failed
/// initialization, degenerate variational family, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Operation invoked out of sequence (e.g. evaluating a run that was
/// never trained).
class StateError : public std::runtime_error {
 public:
  explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace credence
