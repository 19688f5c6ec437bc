#pragma once

#include <optional>

#include <Eigen/Core>

#include "vpbox/geometry.hpp"

namespace vpbox {

// Point on the road plane in camera-frame coordinates. The plane is fixed at
// n . X = 1, so coordinates are in road-plane units; multiply by the
// calibration scale to get meters.
struct RoadPoint {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
};

// focal = sqrt(-(vp1 - pp) . (vp2 - pp)). Throws NonOrthogonalVPs when the
// planar dot product is not negative.
double focal_from_vps(ImagePoint vp1, ImagePoint vp2, ImagePoint pp);

// Third orthogonal vanishing point from the cross product of the back-projected
// rays. Throws VerticalThirdVP when it lies at infinity.
ImagePoint third_vp(ImagePoint vp1, ImagePoint vp2, ImagePoint pp, double focal);

// Camera model completed from two vanishing points and the principal point.
// Immutable once built.
class CameraCalibration {
 public:
  // pp defaults to the image center.
  static CameraCalibration from_vps(ImagePoint vp1, ImagePoint vp2, double scale,
                                    ImageSize image_size,
                                    std::optional<ImagePoint> pp = std::nullopt);

  ImagePoint vp1() const { return vp1_; }
  ImagePoint vp2() const { return vp2_; }
  ImagePoint vp3() const { return vp3_; }
  ImagePoint pp() const { return pp_; }
  double focal() const { return focal_; }
  double scale() const { return scale_; }
  ImageSize image_size() const { return image_size_; }

  // Unit road-plane normal, oriented so the bottom-center pixel ray has a
  // positive product with it.
  const Eigen::Vector3d& road_normal() const { return normal_; }

  // Back-projected ray (p - pp, focal).
  Eigen::Vector3d ray(ImagePoint p) const { return {p.x - pp_.x, p.y - pp_.y, focal_}; }

  // Copy with a different metric scale.
  CameraCalibration with_scale(double scale) const;

 private:
  CameraCalibration() = default;

  ImagePoint vp1_, vp2_, vp3_, pp_;
  double focal_ = 0.0;
  double scale_ = 0.0;
  ImageSize image_size_;
  Eigen::Vector3d normal_ = Eigen::Vector3d::Zero();
};

// Ray/plane intersection. Throws HorizonPoint when n . r <= 1e-9 (relative to
// |r|), i.e. at or above the road horizon.
RoadPoint project_to_road(ImagePoint p, const CameraCalibration& calib);

// Inverse of project_to_road for points on the plane.
ImagePoint render_road_point(const RoadPoint& x, const CameraCalibration& calib);

// scale * |X_p - X_q| in meters.
double road_distance(ImagePoint p, ImagePoint q, const CameraCalibration& calib);
double road_distance(const RoadPoint& a, const RoadPoint& b, const CameraCalibration& calib);

}  // namespace vpbox
