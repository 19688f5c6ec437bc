#include "vpbox/calib.hpp"

#include <cmath>
#include <string>


#include "vpbox/error.hpp"

namespace vpbox {

double focal_from_vps(ImagePoint vp1, ImagePoint vp2, ImagePoint pp) {
  if (!is_finite(vp1) || !is_finite(vp2) || !is_finite(pp)) {
    throw Error(ErrorCode::kInvalidArgument, "vanishing points must be finite");
  }
  const double d = dot(vp1 - pp, vp2 - pp);
  if (!(d < 0.0)) {
    throw Error(ErrorCode::kNonOrthogonalVPs,
                "(vp1 - pp).(vp2 - pp) = " + std::to_string(d) + " must be negative");
  }
  return std::sqrt(-d);
}

ImagePoint third_vp(ImagePoint vp1, ImagePoint vp2, ImagePoint pp, double focal) {
  if (!(focal > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal must be positive");
  const Eigen::Vector3d d1(vp1.x - pp.x, vp1.y - pp.y, focal);
  const Eigen::Vector3d d2(vp2.x - pp.x, vp2.y - pp.y, focal);
  const Eigen::Vector3d d3 = d1.cross(d2);
  if (std::abs(d3.z()) < 1e-12 * d3.norm()) {
    throw Error(ErrorCode::kVerticalThirdVP, "third vanishing point lies at infinity");
  }
  return {pp.x + focal * d3.x() / d3.z(), pp.y + focal * d3.y() / d3.z()};
}

CameraCalibration CameraCalibration::from_vps(ImagePoint vp1, ImagePoint vp2, double scale,
                                              ImageSize image_size,
                                              std::optional<ImagePoint> pp) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  if (image_size.width <= 0 || image_size.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  CameraCalibration c;
  c.vp1_ = vp1;
  c.vp2_ = vp2;
  c.pp_ = pp.value_or(ImagePoint{image_size.width / 2.0, image_size.height / 2.0});
  c.focal_ = focal_from_vps(vp1, vp2, c.pp_);
  c.vp3_ = third_vp(vp1, vp2, c.pp_, c.focal_);
  c.scale_ = scale;
  c.image_size_ = image_size;

  const Eigen::Vector3d d1 = c.ray(vp1);
  const Eigen::Vector3d d2 = c.ray(vp2);
  c.normal_ = d1.cross(d2).normalized();
  const Eigen::Vector3d bottom = c.ray({image_size.width / 2.0, double(image_size.height)});
  if (c.normal_.dot(bottom) < 0.0) c.normal_ = -c.normal_;
  return c;
}

CameraCalibration CameraCalibration::with_scale(double scale) const {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  CameraCalibration c = *this;
  c.scale_ = scale;
  return c;
}

RoadPoint project_to_road(ImagePoint p, const CameraCalibration& calib) {
  if (!is_finite(p)) throw Error(ErrorCode::kInvalidArgument, "point must be finite");
  const Eigen::Vector3d r = calib.ray(p);
  const double nr = calib.road_normal().dot(r);
  if (!(nr > 1e-9 * r.norm())) {
    throw Error(ErrorCode::kHorizonPoint, "pixel lies at or above the road horizon");
  }
  return {r / nr};
}

ImagePoint render_road_point(const RoadPoint& x, const CameraCalibration& calib) {
  const Eigen::Vector3d& v = x.xyz;
  return {calib.pp().x + calib.focal() * v.x() / v.z(),
          calib.pp().y + calib.focal() * v.y() / v.z()};
}

double road_distance(const RoadPoint& a, const RoadPoint& b, const CameraCalibration& calib) {
  return calib.scale() * (a.xyz - b.xyz).norm();
}

double road_distance(ImagePoint p, ImagePoint q, const CameraCalibration& calib) {
  return road_distance(project_to_road(p, calib), project_to_road(q, calib), calib);
}

}  // namespace vpbox
