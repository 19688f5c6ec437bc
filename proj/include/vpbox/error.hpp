#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpbox {

enum class ErrorCode {
  kNonOrthogonalVPs,
  kVerticalThirdVP,
  kHorizonPoint,
  kVPInsideMask,
  kParallelLines,
  kDegenerateQuad,
  kConstructionFailure,
  kPointAtInfinity,
  kInvalidGeometry,
  kDegenerateVPU,
  kEmptyMask,
  kDegenerateBox,
  kDimensionMismatch,
  kZeroAnchors,
  kNonMonotonicFrame,
  kInsufficientDetections,
  kEmptyList,
  kSceneConstructionFailure,
  kInvalidArgument,
  kFormatError,
  kIOError,
};

std::string_view error_name(ErrorCode code);

// Process exit code a CLI run should return for an error of this kind:
// 2 for geometry failures, 3 for file/format problems, 1 otherwise.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace vpbox
