#pragma once

#include <array>
#include <optional>

#include "vpbox/geometry.hpp"
#include "vpbox/rectify.hpp"

namespace vpbox {

struct Box2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  ImagePoint center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }

  friend bool operator==(const Box2D&, const Box2D&) = default;
};

// 2D box in rectified space plus the relative height of the cc line.
struct CcBox {
  Box2D box;
  double cc = 0.0;
  double score = 1.0;
};

// Cuboid in rectified space: an axis-aligned near face and its homothetic
// image about VPU with ratio k. The far face is the smaller one, closer to VPU.
struct Box3DRect {
  Box2D near_face;
  double k = 1.0;
  ImagePoint vpu;

  Box2D far_face() const;
  Box2D enclosing_box() const;
  bool vpu_above() const { return vpu.y < near_face.y_min; }

  // near TL, TR, BR, BL, then far TL, TR, BR, BL.
  std::array<ImagePoint, 8> vertices() const;
};

// The same cuboid in original image coordinates, vertices in the winding of
// Box3DRect::vertices().
struct Box3DImage {
  std::array<ImagePoint, 8> vertices;
  bool vpu_above = true;
};

// Enclosing 2D box and cc. The cc line is the top edge of the lower of the two
// axis-aligned faces: the near face when VPU is above, the far face when VPU is
// below. Total on valid input; cc is in [0, 1].
CcBox parametrize(const Box3DRect& box, double score = 1.0);

// Inverse of parametrize. Throws DegenerateVPU when VPU is vertically level
// with the box and InvalidGeometry when no cuboid matches (box, cc).
Box3DRect reconstruct(const CcBox& cb, ImagePoint vpu);

// Non-throwing variant for hot paths; nullopt on InvalidGeometry/DegenerateVPU.
std::optional<Box3DRect> try_reconstruct(const CcBox& cb, ImagePoint vpu);

Box3DImage to_image(const Box3DRect& box, const Homography& h);
inline Box3DImage to_image(const Box3DRect& box, const RectifiedView& view) {
  return to_image(box, view.h);
}

// Midpoint of the frontal bottom edge: the lowest horizontal edge of the
// rectified box (near face bottom when VPU is above, far face bottom when
// below). The midpoint is taken projectively, through the diagonals of the
// bottom face, so it is the image of the true 3D midpoint.
ImagePoint reference_point(const Box3DImage& box);

}  // namespace vpbox
