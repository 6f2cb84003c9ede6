#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace birot {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidRotation,
  kDegenerateBearing,
  kAmbiguousCheirality,
  kTooFewInliers,
  kSingularSystem,
  kIndeterminateSign,
  kVisibilityExhausted,
  kLengthMismatch,
  kInput,
};

const char* ToString(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for failures of the numerical pipeline (as opposed to bad input).
  bool IsNumerical() const noexcept {
    switch (code_) {
      case ErrorCode::kDegenerateBearing:
      case ErrorCode::kAmbiguousCheirality:
      case ErrorCode::kTooFewInliers:
      case ErrorCode::kSingularSystem:
      case ErrorCode::kIndeterminateSign:
      case ErrorCode::kVisibilityExhausted:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

// Raised by residual/Jacobian evaluation; index() is the offending correspondence.
class DegenerateBearingError : public Error {
 public:
  DegenerateBearingError(std::size_t index, const std::string& what)
      : Error(ErrorCode::kDegenerateBearing, what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace birot
