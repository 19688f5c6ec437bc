#include "vpbox/boxgeom.hpp"

#include <algorithm>
#include <cmath>

#include "vpbox/error.hpp"

namespace vpbox {

Box2D Box3DRect::far_face() const {
  auto toward = [&](double c, double vc) { return vc + k * (c - vc); };
  return {toward(near_face.x_min, vpu.x), toward(near_face.y_min, vpu.y),
          toward(near_face.x_max, vpu.x), toward(near_face.y_max, vpu.y)};
}

Box2D Box3DRect::enclosing_box() const {
  const Box2D f = far_face();
  return {std::min(near_face.x_min, f.x_min), std::min(near_face.y_min, f.y_min),
          std::max(near_face.x_max, f.x_max), std::max(near_face.y_max, f.y_max)};
}

std::array<ImagePoint, 8> Box3DRect::vertices() const {
  const Box2D& n = near_face;
  const Box2D f = far_face();
  return {ImagePoint{n.x_min, n.y_min}, {n.x_max, n.y_min}, {n.x_max, n.y_max}, {n.x_min, n.y_max},
          {f.x_min, f.y_min},           {f.x_max, f.y_min}, {f.x_max, f.y_max}, {f.x_min, f.y_max}};
}

CcBox parametrize(const Box3DRect& box, double score) {
  const Box2D hull = box.enclosing_box();
  const double line_y = box.vpu_above() ? box.near_face.y_min : box.far_face().y_min;
  const double cc = std::clamp((line_y - hull.y_min) / hull.height(), 0.0, 1.0);
  return {hull, cc, score};
}

Box3DRect reconstruct(const CcBox& cb, ImagePoint vpu) {
  const Box2D& b = cb.box;
  if (!b.valid()) throw Error(ErrorCode::kInvalidGeometry, "2D box has no area");
  if (!(cb.cc >= 0.0 && cb.cc <= 1.0)) throw Error(ErrorCode::kInvalidGeometry, "cc outside [0, 1]");
  if (!is_finite(vpu)) throw Error(ErrorCode::kInvalidArgument, "VPU must be finite");
  if (vpu.y >= b.y_min && vpu.y <= b.y_max) {
    throw Error(ErrorCode::kDegenerateVPU, "VPU is vertically level with the box");
  }

  const double line_y = b.y_min + cb.cc * b.height();
  Box3DRect r;
  r.vpu = vpu;
  if (vpu.y < b.y_min) {
    // The cc line is the top edge of the near face; the far face top is the
    // box top.
    r.k = (b.y_min - vpu.y) / (line_y - vpu.y);
    r.near_face.y_min = line_y;
    r.near_face.y_max = b.y_max;
  } else {
    // The cc line is the top edge of the far face; the far face bottom is the
    // box bottom.
    r.k = (vpu.y - line_y) / (vpu.y - b.y_min);
    r.near_face.y_min = b.y_min;
    r.near_face.y_max = vpu.y + (b.y_max - vpu.y) / r.k;
  }

  // The near face reaches the box side away from VPU, the far face the side
  // towards it. With VPU horizontally inside the box both ends of the cc line
  // are near-face vertices.
  if (vpu.x > b.x_max) {
    r.near_face.x_min = b.x_min;
    r.near_face.x_max = vpu.x + (b.x_max - vpu.x) / r.k;
  } else if (vpu.x < b.x_min) {
    r.near_face.x_max = b.x_max;
    r.near_face.x_min = vpu.x + (b.x_min - vpu.x) / r.k;
  } else {
    r.near_face.x_min = b.x_min;
    r.near_face.x_max = b.x_max;
  }

  const double tol = 1e-9 * std::max({1.0, b.width(), b.height()});
  if (!(r.near_face.width() > tol) || !(r.near_face.height() > tol) || !(r.k > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "no cuboid matches the box and cc");
  }
  return r;
}

std::optional<Box3DRect> try_reconstruct(const CcBox& cb, ImagePoint vpu) {
  try {
    return reconstruct(cb, vpu);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidGeometry || e.code() == ErrorCode::kDegenerateVPU) {
      return std::nullopt;
    }
    throw;
  }
}

Box3DImage to_image(const Box3DRect& box, const Homography& h) {
  Box3DImage out;
  const auto v = box.vertices();
  for (size_t i = 0; i < v.size(); ++i) out.vertices[i] = h.apply_inverse(v[i]);
  out.vpu_above = box.vpu_above();
  return out;
}

ImagePoint reference_point(const Box3DImage& box) {
  const auto& v = box.vertices;
  // Bottom face as (front-left, front-right, back-right, back-left).
  const ImagePoint a = box.vpu_above ? v[3] : v[7];
  const ImagePoint b = box.vpu_above ? v[2] : v[6];
  const ImagePoint c = box.vpu_above ? v[6] : v[5];
  const ImagePoint d = box.vpu_above ? v[7] : v[4];

  const double edge = distance(a, b);
  const double area = std::abs(cross(c - a, d - b));
  if (!(edge > 0.0) || area <= 1e-9 * edge * edge) return midpoint(a, b);

  auto join = [](const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
    return p.cross(q).normalized();
  };
  const Eigen::Vector3d ha = homogeneous(a), hb = homogeneous(b);
  const Eigen::Vector3d hc = homogeneous(c), hd = homogeneous(d);
  const Eigen::Vector3d center = join(join(ha, hc), join(hb, hd));
  const Eigen::Vector3d side_vp = join(join(ha, hd), join(hb, hc));
  const Eigen::Vector3d m = join(join(center, side_vp), join(ha, hb));
  if (std::abs(m.z()) < 1e-15) return midpoint(a, b);
  return {m.x() / m.z(), m.y() / m.z()};
}

}  // namespace vpbox
