#include "vpbox/error.hpp"

namespace vpbox {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonOrthogonalVPs: return "NonOrthogonalVPs";
    case ErrorCode::kVerticalThirdVP: return "VerticalThirdVP";
    case ErrorCode::kHorizonPoint: return "HorizonPoint";
    case ErrorCode::kVPInsideMask: return "VPInsideMask";
    case ErrorCode::kParallelLines: return "ParallelLines";
    case ErrorCode::kDegenerateQuad: return "DegenerateQuad";
    case ErrorCode::kConstructionFailure: return "ConstructionFailure";
    case ErrorCode::kPointAtInfinity: return "PointAtInfinity";
    case ErrorCode::kInvalidGeometry: return "InvalidGeometry";
    case ErrorCode::kDegenerateVPU: return "DegenerateVPU";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroAnchors: return "ZeroAnchors";
    case ErrorCode::kNonMonotonicFrame: return "NonMonotonicFrame";
    case ErrorCode::kInsufficientDetections: return "InsufficientDetections";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kSceneConstructionFailure: return "SceneConstructionFailure";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kIOError: return "IOError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormatError:
    case ErrorCode::kIOError:
      return 3;
    case ErrorCode::kInvalidArgument:
      return 1;
    default:
      return 2;
  }
}

}  // namespace vpbox
