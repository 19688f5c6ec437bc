#include "vpbox/stream.hpp"

#include <algorithm>

namespace vpbox {

std::size_t DetectionStream::detection_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.detections.size();
  return n;
}

std::array<ImagePoint, 4> unwarp_corners(const Box2D& b, const Homography& h) {
  return {h.apply_inverse({b.x_min, b.y_min}), h.apply_inverse({b.x_max, b.y_min}),
          h.apply_inverse({b.x_max, b.y_max}), h.apply_inverse({b.x_min, b.y_max})};
}

Box2D warp_corners(const std::array<ImagePoint, 4>& corners, const Homography& h) {
  const ImagePoint p0 = h.apply(corners[0]);
  Box2D b{p0.x, p0.y, p0.x, p0.y};
  for (size_t i = 1; i < corners.size(); ++i) {
    const ImagePoint p = h.apply(corners[i]);
    b.x_min = std::min(b.x_min, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.x_max = std::max(b.x_max, p.x);
    b.y_max = std::max(b.y_max, p.y);
  }
  return b;
}

}  // namespace vpbox
