#include "vpbox/geometry.hpp"

#include <algorithm>

#include "vpbox/error.hpp"

namespace vpbox {

Line Line::through(ImagePoint p, ImagePoint q) {
  return from_coeffs(homogeneous(p).cross(homogeneous(q)));
}

Line Line::from_coeffs(const Eigen::Vector3d& l) {
  const double n = std::hypot(l.x(), l.y());
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kInvalidArgument, "line with zero normal");
  }
  return {l.x() / n, l.y() / n, l.z() / n};
}

ImagePoint intersect(const Line& l1, const Line& l2) {
  const Eigen::Vector3d p = l1.coeffs().cross(l2.coeffs());
  if (std::abs(p.z()) < 1e-12) {
    throw Error(ErrorCode::kParallelLines, "lines do not intersect at a finite point");
  }
  return {p.x() / p.z(), p.y() / p.z()};
}

std::vector<ImagePoint> convex_hull(std::span<const ImagePoint> points) {
  std::vector<ImagePoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](ImagePoint a, ImagePoint b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<ImagePoint> hull(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  for (size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= t && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

bool in_convex_polygon(std::span<const ImagePoint> hull, ImagePoint p, double eps) {
  if (hull.empty()) return false;
  if (hull.size() == 1) return distance(hull[0], p) <= eps;
  if (hull.size() == 2) {
    const ImagePoint d = hull[1] - hull[0];
    const double len = norm(d);
    const double off = std::abs(cross(d, p - hull[0])) / len;
    const double t = dot(d, p - hull[0]) / (len * len);
    return off <= eps && t >= -eps / len && t <= 1.0 + eps / len;
  }
  for (size_t i = 0; i < hull.size(); ++i) {
    const ImagePoint a = hull[i];
    const ImagePoint b = hull[(i + 1) % hull.size()];
    const double side = cross(b - a, p - a) / distance(a, b);
    if (side < -eps) return false;
  }
  return true;
}

Bounds bounds_of(std::span<const ImagePoint> points) {
  Bounds b{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points) {
    b.x_min = std::min(b.x_min, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.x_max = std::max(b.x_max, p.x);
    b.y_max = std::max(b.y_max, p.y);
  }
  return b;
}

Homography::Homography() : m_(Eigen::Matrix3d::Identity()), inv_(Eigen::Matrix3d::Identity()) {}

Homography::Homography(const Eigen::Matrix3d& m) : m_(m) {
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-12 * std::pow(m.norm(), 3)) || !std::isfinite(det)) {
    throw Error(ErrorCode::kDegenerateQuad, "homography is singular");
  }
  inv_ = m.inverse();
}

namespace {

ImagePoint dehomogenize(const Eigen::Vector3d& q) {
  // Relative test: |w| / |(x, y, w)| below 1e-12 is treated as ideal.
  if (!(std::abs(q.z()) > 1e-12 * q.norm())) {
    throw Error(ErrorCode::kPointAtInfinity, "point maps to infinity");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

}  // namespace

ImagePoint Homography::apply(ImagePoint p) const { return dehomogenize(m_ * homogeneous(p)); }

ImagePoint Homography::apply_inverse(ImagePoint p) const {
  return dehomogenize(inv_ * homogeneous(p));
}

Eigen::Matrix2d Homography::jacobian(ImagePoint p) const {
  const Eigen::Vector3d q = m_ * homogeneous(p);
  const double w = q.z();
  Eigen::Matrix2d j;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      j(r, c) = (m_(r, c) - q(r) / w * m_(2, c)) / w;
    }
  }
  return j;
}

}  // namespace vpbox
