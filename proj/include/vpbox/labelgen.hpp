#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vpbox/boxgeom.hpp"
#include "vpbox/rectify.hpp"

namespace vpbox {

// Foreground pixels of one vehicle instance in original image coordinates.
struct InstanceMask {
  int frame = 0;
  int id = 0;
  std::vector<std::array<int, 2>> pixels;
};

struct LabelRecord {
  int frame = 0;
  int id = 0;
  CcBox label;
};

// Tight bounds of a point set. Throws EmptyMask / DegenerateBox.
Box2D bbox_of_mask(std::span<const ImagePoint> points);

// Rectified outline of an instance: the four corners of every pixel, warped.
// Only the corners of each row's extreme pixels are kept; the warp preserves
// convexity, so the hull is unchanged.
std::vector<ImagePoint> warp_instance(const InstanceMask& mask, const Homography& h);

struct CcEstimate {
  CcBox box;
  std::array<double, 2> candidates{};  // one unclamped cc per tangent
  bool clamped = false;
};

// cc from a rectified mask: tangents from VPU, their bbox intersections, and
// the cc line nearer to VPU (the wider option). Throws VPInsideMask,
// DegenerateVPU, EmptyMask, DegenerateBox.
CcEstimate cc_from_mask(std::span<const ImagePoint> points, ImagePoint vpu);

struct LabelBatch {
  std::vector<LabelRecord> records;     // sorted by (frame, id)
  std::map<std::string, int> skipped;   // reason -> count
  int clamped = 0;
};

LabelBatch generate_labels(std::span<const InstanceMask> masks, const RectifiedView& view);

}  // namespace vpbox
