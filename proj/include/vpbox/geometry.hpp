#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

namespace vpbox {

// Pixel coordinates, x to the right and y down. Vanishing points may lie far
// outside the image but are always finite.
struct ImagePoint {
  double x = 0.0;
  double y = 0.0;

  friend ImagePoint operator+(ImagePoint a, ImagePoint b) { return {a.x + b.x, a.y + b.y}; }
  friend ImagePoint operator-(ImagePoint a, ImagePoint b) { return {a.x - b.x, a.y - b.y}; }
  friend ImagePoint operator*(double s, ImagePoint a) { return {s * a.x, s * a.y}; }
  friend bool operator==(ImagePoint a, ImagePoint b) = default;
};

inline double dot(ImagePoint a, ImagePoint b) { return a.x * b.x + a.y * b.y; }
inline double cross(ImagePoint a, ImagePoint b) { return a.x * b.y - a.y * b.x; }
inline double norm(ImagePoint a) { return std::hypot(a.x, a.y); }
inline double distance(ImagePoint a, ImagePoint b) { return norm(a - b); }
inline bool is_finite(ImagePoint p) { return std::isfinite(p.x) && std::isfinite(p.y); }
inline ImagePoint midpoint(ImagePoint a, ImagePoint b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

inline Eigen::Vector3d homogeneous(ImagePoint p) { return {p.x, p.y, 1.0}; }

struct ImageSize {
  int width = 0;
  int height = 0;

  friend bool operator==(ImageSize, ImageSize) = default;
};

// Homogeneous line a*x + b*y + c = 0 with a^2 + b^2 = 1.
struct Line {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  static Line through(ImagePoint p, ImagePoint q);
  // Normalizes arbitrary homogeneous coefficients; throws on (0, 0, *).
  static Line from_coeffs(const Eigen::Vector3d& l);

  double signed_distance(ImagePoint p) const { return a * p.x + b * p.y + c; }
  Line flipped() const { return {-a, -b, -c}; }
  Eigen::Vector3d coeffs() const { return {a, b, c}; }
};

// Intersection of two lines; throws ParallelLines when |sin(angle)| < 1e-12.
ImagePoint intersect(const Line& l1, const Line& l2);

// Convex hull (Andrew's monotone chain). Collinear boundary points are
// dropped; the result is counter-clockwise in a y-up frame.
std::vector<ImagePoint> convex_hull(std::span<const ImagePoint> points);

// True when p lies inside or on the boundary of the convex polygon `hull`
// (as returned by convex_hull), with tolerance `eps` in pixels.
bool in_convex_polygon(std::span<const ImagePoint> hull, ImagePoint p, double eps = 1e-9);

// Axis-aligned bounds of a point set.
struct Bounds {
  double x_min, y_min, x_max, y_max;
};
Bounds bounds_of(std::span<const ImagePoint> points);

// 3x3 projective map. The inverse is computed once at construction.
class Homography {
 public:
  Homography();
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return Homography(); }

  const Eigen::Matrix3d& matrix() const { return m_; }
  const Eigen::Matrix3d& inverse_matrix() const { return inv_; }

  // Throws PointAtInfinity when the mapped point has |w| < 1e-12.
  ImagePoint apply(ImagePoint p) const;
  ImagePoint apply_inverse(ImagePoint p) const;

  Eigen::Vector3d apply_h(const Eigen::Vector3d& p) const { return m_ * p; }

  // Jacobian of the dehomogenized forward map at p.
  Eigen::Matrix2d jacobian(ImagePoint p) const;

 private:
  Eigen::Matrix3d m_;
  Eigen::Matrix3d inv_;
};

inline ImagePoint warp_point(const Homography& h, ImagePoint p) { return h.apply(p); }
inline ImagePoint unwarp_point(const Homography& h, ImagePoint p) { return h.apply_inverse(p); }

}  // namespace vpbox
