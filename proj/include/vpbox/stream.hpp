#pragma once

#include <array>
#include <vector>

#include "vpbox/boxgeom.hpp"
#include "vpbox/speed.hpp"

namespace vpbox {

enum class CoordinateSpace { kRectified, kOriginal };

// One detector output. In rectified space `ccbox.box` is authoritative; in
// original space the four box corners are given in the original image (as
// unwarped from rectified space) and `ccbox.box` is filled in by warping them.
struct StreamDetection {
  CcBox ccbox;
  std::array<ImagePoint, 4> corners{};
};

struct FrameDetections {
  int frame = 0;
  std::vector<StreamDetection> detections;
};

struct DetectionStream {
  double fps = 0.0;  // 0 when the file does not say
  CoordinateSpace space = CoordinateSpace::kRectified;
  std::vector<FrameDetections> frames;  // strictly increasing frame indices

  std::size_t detection_count() const;
};

struct GroundTruth {
  std::array<ImagePoint, 2> measurement_line{};
  std::vector<Lane> lanes;
  std::vector<GroundTruthRecord> vehicles;
};

// Corners of a rectified box in original image coordinates, in the order
// (x_min,y_min), (x_max,y_min), (x_max,y_max), (x_min,y_max).
std::array<ImagePoint, 4> unwarp_corners(const Box2D& box, const Homography& h);

// Bounds of warped corners.
Box2D warp_corners(const std::array<ImagePoint, 4>& corners, const Homography& h);

}  // namespace vpbox
