#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vpbox/calib.hpp"
#include "vpbox/geometry.hpp"

namespace vpbox {

// Binary raster of the surveilled road segment in original image pixels.
// Pixel (x, y) covers the square [x, x+1) x [y, y+1).
class RoadMask {
 public:
  RoadMask() = default;

  // Nonzero bytes are foreground; `bits` is row-major with size w*h.
  static RoadMask from_raster(ImageSize size, std::vector<std::uint8_t> bits);
  // Rasterizes a simple polygon: a pixel is foreground when its center is
  // inside (even-odd rule).
  static RoadMask from_polygon(std::span<const ImagePoint> polygon, ImageSize size);

  ImageSize size() const { return size_; }
  bool empty() const { return bottom_row_ < 0; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < size_.width && y < size_.height &&
           bits_[static_cast<size_t>(y) * size_.width + x] != 0;
  }
  std::size_t count() const;
  int top_row() const { return top_row_; }
  int bottom_row() const { return bottom_row_; }

  // Convex hull of all foreground pixel corners.
  std::vector<ImagePoint> hull() const;

  // Copy with every row below (bottom_row() + 1 - rows) cleared.
  RoadMask cropped_bottom(int rows) const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }

 private:
  void index_rows();

  ImageSize size_;
  std::vector<std::uint8_t> bits_;
  std::vector<int> row_min_;
  std::vector<int> row_max_;
  int top_row_ = -1;
  int bottom_row_ = -1;
};

enum class VpPair { kVp1Vp2, kVp2Vp3 };

std::string_view to_string(VpPair pair);
// Accepts "vp1vp2"/"VP1-VP2" and "vp2vp3"/"VP2-VP3"; rejects the VP1-VP3 pair.
VpPair parse_vp_pair(std::string_view s);

struct TangentPair {
  Line first;
  Line second;
  ImagePoint touch_first;
  ImagePoint touch_second;
};

// The two lines through `vp` tangent to the convex hull of `points`, oriented
// so every point has a non-negative signed distance. Throws VPInsideMask when
// vp lies inside or on the hull.
TangentPair tangent_lines(ImagePoint vp, std::span<const ImagePoint> points);
TangentPair tangent_lines(ImagePoint vp, const RoadMask& mask);

// Pairwise intersections, ordered (a,c), (a,d), (b,c), (b,d) for
// quad_corners(a, b, c, d).
std::array<ImagePoint, 4> quad_corners(const Line& t1a, const Line& t1b, const Line& t2a,
                                       const Line& t2b);

// Four-point perspective solve. Throws DegenerateQuad when three points of
// either quad are collinear.
Homography homography_from_quad(const std::array<ImagePoint, 4>& src,
                                const std::array<ImagePoint, 4>& dst);

struct RectifiedView {
  Homography h;
  ImageSize out_size;
  VpPair pair = VpPair::kVp2Vp3;
  ImagePoint vpu;
  double coverage = 0.0;
  int crop_rows = 0;
};

inline constexpr double kMinCoverage = 0.8;

// Fraction of output pixels whose centers unwarp into the mask.
double mask_coverage(const Homography& h, const RoadMask& mask, ImageSize out_size);

// Builds the perspective transformation for the chosen VP pair: VP2 lines
// become horizontal, VP1 (or VP3) lines vertical. The mask is cropped from the
// bottom `crop_step` rows at a time until the warped mask covers at least 80%
// of the output image. Throws ConstructionFailure.
RectifiedView build_rectification(const CameraCalibration& calib, const RoadMask& mask,
                                  VpPair pair, ImageSize out_size, int crop_step = 1);

// Vanishing points of a calibration as used by a pair: the one mapped to the
// horizontal ideal point, the one mapped to the vertical ideal point, and the
// unused one.
struct PairVps {
  ImagePoint horizontal;
  ImagePoint vertical;
  ImagePoint unused;
};
PairVps pair_vps(const CameraCalibration& calib, VpPair pair);

}  // namespace vpbox
