#include "vpbox/rectify.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include <Eigen/SVD>

#include "vpbox/error.hpp"

namespace vpbox {

// ---------------------------------------------------------------------------
// RoadMask

RoadMask RoadMask::from_raster(ImageSize size, std::vector<std::uint8_t> bits) {
  if (size.width <= 0 || size.height <= 0 ||
      bits.size() != static_cast<size_t>(size.width) * size.height) {
    throw Error(ErrorCode::kFormatError, "raster size does not match image size");
  }
  RoadMask m;
  m.size_ = size;
  m.bits_ = std::move(bits);
  for (auto& b : m.bits_) b = b ? 1 : 0;
  m.index_rows();
  return m;
}

RoadMask RoadMask::from_polygon(std::span<const ImagePoint> polygon, ImageSize size) {
  if (polygon.size() < 3) throw Error(ErrorCode::kFormatError, "polygon needs >= 3 vertices");
  RoadMask m;
  m.size_ = size;
  m.bits_.assign(static_cast<size_t>(size.width) * size.height, 0);
  std::vector<double> xs;
  for (int y = 0; y < size.height; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (size_t i = 0; i < polygon.size(); ++i) {
      const ImagePoint a = polygon[i];
      const ImagePoint b = polygon[(i + 1) % polygon.size()];
      if ((a.y <= yc) == (b.y <= yc)) continue;
      xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
      // pixel centers x + 0.5 in [xs[i], xs[i+1])
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
      const int x1 = std::min(size.width - 1, static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1);
      for (int x = x0; x <= x1; ++x) m.bits_[static_cast<size_t>(y) * size.width + x] = 1;
    }
  }
  m.index_rows();
  return m;
}

void RoadMask::index_rows() {
  row_min_.assign(size_.height, -1);
  row_max_.assign(size_.height, -1);
  top_row_ = bottom_row_ = -1;
  for (int y = 0; y < size_.height; ++y) {
    const std::uint8_t* row = bits_.data() + static_cast<size_t>(y) * size_.width;
    for (int x = 0; x < size_.width; ++x) {
      if (!row[x]) continue;
      if (row_min_[y] < 0) row_min_[y] = x;
      row_max_[y] = x;
    }
    if (row_min_[y] >= 0) {
      if (top_row_ < 0) top_row_ = y;
      bottom_row_ = y;
    }
  }
}

std::size_t RoadMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::vector<ImagePoint> RoadMask::hull() const {
  std::vector<ImagePoint> corners;
  for (int y = std::max(top_row_, 0); y <= bottom_row_; ++y) {
    if (row_min_[y] < 0) continue;
    const double x0 = row_min_[y];
    const double x1 = row_max_[y] + 1.0;
    corners.insert(corners.end(), {{x0, double(y)}, {x0, y + 1.0}, {x1, double(y)}, {x1, y + 1.0}});
  }
  return convex_hull(corners);
}

RoadMask RoadMask::cropped_bottom(int rows) const {
  RoadMask m = *this;
  if (rows <= 0 || empty()) return m;
  const int first_cleared = std::max(0, bottom_row_ + 1 - rows);
  std::fill(m.bits_.begin() + static_cast<std::ptrdiff_t>(first_cleared) * size_.width,
            m.bits_.end(), 0);
  for (int y = first_cleared; y < size_.height; ++y) m.row_min_[y] = m.row_max_[y] = -1;
  m.bottom_row_ = -1;
  for (int y = first_cleared - 1; y >= 0; --y) {
    if (m.row_min_[y] >= 0) {
      m.bottom_row_ = y;
      break;
    }
  }
  if (m.bottom_row_ < 0) m.top_row_ = -1;
  return m;
}

// ---------------------------------------------------------------------------

std::string_view to_string(VpPair pair) {
  return pair == VpPair::kVp1Vp2 ? "VP1-VP2" : "VP2-VP3";
}

VpPair parse_vp_pair(std::string_view s) {
  std::string t;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch))) t.push_back(std::tolower(ch));
  }
  if (t == "vp1vp2" || t == "vp2vp1") return VpPair::kVp1Vp2;
  if (t == "vp2vp3" || t == "vp3vp2") return VpPair::kVp2Vp3;
  if (t == "vp1vp3" || t == "vp3vp1") {
    throw Error(ErrorCode::kInvalidArgument, "the VP1-VP3 pair is not supported");
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown VP pair '" + std::string(s) + "'");
}

PairVps pair_vps(const CameraCalibration& calib, VpPair pair) {
  if (pair == VpPair::kVp1Vp2) return {calib.vp2(), calib.vp1(), calib.vp3()};
  return {calib.vp2(), calib.vp3(), calib.vp1()};
}

TangentPair tangent_lines(ImagePoint vp, std::span<const ImagePoint> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyMask, "no points to take tangents to");
  const std::vector<ImagePoint> hull = convex_hull(points);
  if (in_convex_polygon(hull, vp, 1e-9)) {
    throw Error(ErrorCode::kVPInsideMask, "vanishing point lies inside the mask hull");
  }

  // Angular extremes seen from vp. Every hull vertex lies in an open half-plane
  // around vp, so cross-product comparisons are a total order. Ties keep the
  // vertex nearest to vp.
  auto extreme = [&](double orientation) {
    ImagePoint best = hull[0];
    for (const auto& p : hull) {
      const double c = orientation * cross(best - vp, p - vp);
      const double tol = 1e-15 * norm(best - vp) * norm(p - vp);
      if (c > tol || (std::abs(c) <= tol && distance(p, vp) < distance(best, vp))) best = p;
    }
    return best;
  };
  const ImagePoint ccw = extreme(1.0);
  const ImagePoint cw = extreme(-1.0);

  ImagePoint centroid{0.0, 0.0};
  for (const auto& p : hull) centroid = centroid + p;
  centroid = (1.0 / hull.size()) * centroid;

  auto oriented = [&](ImagePoint touch) {
    Line l = Line::through(vp, touch);
    if (l.signed_distance(centroid) < 0.0) l = l.flipped();
    return l;
  };
  return {oriented(cw), oriented(ccw), cw, ccw};
}

TangentPair tangent_lines(ImagePoint vp, const RoadMask& mask) {
  if (mask.empty()) throw Error(ErrorCode::kEmptyMask, "mask has no foreground");
  const auto hull = mask.hull();
  return tangent_lines(vp, hull);
}

std::array<ImagePoint, 4> quad_corners(const Line& t1a, const Line& t1b, const Line& t2a,
                                       const Line& t2b) {
  return {intersect(t1a, t2a), intersect(t1a, t2b), intersect(t1b, t2a), intersect(t1b, t2b)};
}

namespace {

bool has_collinear_triple(const std::array<ImagePoint, 4>& q) {
  double scale = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) scale = std::max(scale, distance(q[i], q[j]));
  if (!(scale > 0.0)) return true;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k) {
        if (std::abs(cross(q[j] - q[i], q[k] - q[i])) <= 1e-12 * scale * scale) return true;
      }
  return false;
}

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::array<ImagePoint, 4>& q) {
  ImagePoint c{0.0, 0.0};
  for (const auto& p : q) c = c + p;
  c = 0.25 * c;
  double mean = 0.0;
  for (const auto& p : q) mean += distance(p, c);
  mean *= 0.25;
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1;
  return t;
}

}  // namespace

Homography homography_from_quad(const std::array<ImagePoint, 4>& src,
                                const std::array<ImagePoint, 4>& dst) {
  for (const auto& p : src)
    if (!is_finite(p)) throw Error(ErrorCode::kDegenerateQuad, "non-finite source point");
  for (const auto& p : dst)
    if (!is_finite(p)) throw Error(ErrorCode::kDegenerateQuad, "non-finite target point");
  if (has_collinear_triple(src) || has_collinear_triple(dst)) {
    throw Error(ErrorCode::kDegenerateQuad, "three of the four points are collinear");
  }
  const Eigen::Matrix3d ts = normalizing_transform(src);
  const Eigen::Matrix3d td = normalizing_transform(dst);

  Eigen::Matrix<double, 8, 9> a;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d s = ts * homogeneous(src[i]);
    const Eigen::Vector3d d = td * homogeneous(dst[i]);
    const double x = s.x() / s.z(), y = s.y() / s.z();
    const double u = d.x() / d.z(), v = d.y() / d.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::Matrix3d m = td.inverse() * hn * ts;
  m /= m.norm();
  if (m(2, 2) < 0.0) m = -m;
  return Homography(m);
}

double mask_coverage(const Homography& h, const RoadMask& mask, ImageSize out_size) {
  const Eigen::Matrix3d& inv = h.inverse_matrix();
  const Eigen::Vector3d du = inv.col(0);
  std::size_t covered = 0;
  for (int v = 0; v < out_size.height; ++v) {
    Eigen::Vector3d q = inv * Eigen::Vector3d(0.5, v + 0.5, 1.0);
    for (int u = 0; u < out_size.width; ++u, q += du) {
      if (q.z() == 0.0) continue;
      const double x = q.x() / q.z();
      const double y = q.y() / q.z();
      if (x < 0.0 || y < 0.0) continue;
      if (mask.contains(static_cast<int>(x), static_cast<int>(y))) ++covered;
    }
  }
  return static_cast<double>(covered) /
         (static_cast<double>(out_size.width) * static_cast<double>(out_size.height));
}

namespace {

ImagePoint hull_centroid(std::span<const ImagePoint> hull) {
  ImagePoint c{0.0, 0.0};
  for (const auto& p : hull) c = c + p;
  return (1.0 / hull.size()) * c;
}

// Chooses which tangent goes to which rectangle side: vertical ordering along
// the travel direction (towards VP1) is preserved and the map is not mirrored.
Homography paired_homography(const std::array<ImagePoint, 4>& quad, ImageSize out,
                             ImagePoint anchor, ImagePoint vp1) {
  const double w = out.width;
  const double hh = out.height;
  // quad = (h0,v0), (h0,v1), (h1,v0), (h1,v1); h-lines -> y = const, v-lines -> x = const.
  bool h0_top = true;
  bool v0_left = true;
  auto targets = [&] {
    const double yh0 = h0_top ? 0.0 : hh, yh1 = h0_top ? hh : 0.0;
    const double xv0 = v0_left ? 0.0 : w, xv1 = v0_left ? w : 0.0;
    return std::array<ImagePoint, 4>{ImagePoint{xv0, yh0}, ImagePoint{xv1, yh0},
                                     ImagePoint{xv0, yh1}, ImagePoint{xv1, yh1}};
  };
  const Homography base = homography_from_quad(quad, targets());

  ImagePoint travel = vp1 - anchor;
  travel = (1.0 / norm(travel)) * travel;
  const Eigen::Matrix2d j = base.jacobian(anchor);
  const Eigen::Vector2d moved = j * Eigen::Vector2d(travel.x, travel.y);
  const bool up_in_original = std::abs(travel.y) > 1e-9 ? travel.y < 0.0 : true;
  const bool up_in_rectified = moved.y() < 0.0;
  // A vertical flip negates both the travel ordering and the orientation; a
  // horizontal flip only the orientation.
  const bool flip_vertical = up_in_original != up_in_rectified;
  const bool mirrored = (j.determinant() < 0.0) != flip_vertical;
  if (!flip_vertical && !mirrored) return base;
  h0_top = !flip_vertical;
  v0_left = !mirrored;
  const Homography h = homography_from_quad(quad, targets());
  return h;
}

}  // namespace

RectifiedView build_rectification(const CameraCalibration& calib, const RoadMask& mask,
                                  VpPair pair, ImageSize out_size, int crop_step) {
  if (out_size.width <= 0 || out_size.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "output size must be positive");
  }
  if (crop_step <= 0) throw Error(ErrorCode::kInvalidArgument, "crop step must be positive");
  if (mask.empty()) throw Error(ErrorCode::kConstructionFailure, "mask is empty");

  const PairVps vps = pair_vps(calib, pair);
  const std::vector<ImagePoint> hull0 = mask.hull();
  for (ImagePoint vp : {vps.horizontal, vps.vertical}) {
    if (in_convex_polygon(hull0, vp, 1e-9)) {
      throw Error(ErrorCode::kConstructionFailure, "VPInsideMask: a vanishing point lies inside the mask");
    }
  }
  // The line joining the two chosen VPs would have to map to infinity.
  const Line joining = Line::through(vps.horizontal, vps.vertical);
  bool pos = false, neg = false;
  for (const auto& p : hull0) {
    const double d = joining.signed_distance(p);
    pos |= d > 1e-9;
    neg |= d < -1e-9;
  }
  if (pos && neg) {
    throw Error(ErrorCode::kConstructionFailure,
                "the line joining the two vanishing points intersects the mask");
  }

  for (int crop = 0;; crop += crop_step) {
    const RoadMask current = mask.cropped_bottom(crop);
    if (current.empty()) {
      throw Error(ErrorCode::kConstructionFailure, "mask exhausted by cropping");
    }
    try {
      const std::vector<ImagePoint> hull = current.hull();
      const TangentPair th = tangent_lines(vps.horizontal, hull);
      const TangentPair tv = tangent_lines(vps.vertical, hull);
      const auto quad = quad_corners(th.first, th.second, tv.first, tv.second);
      const Homography h = paired_homography(quad, out_size, hull_centroid(hull), calib.vp1());
      const double coverage = mask_coverage(h, current, out_size);
      if (coverage >= kMinCoverage) {
        return {h, out_size, pair, h.apply(vps.unused), coverage, crop};
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConstructionFailure) throw;
      throw Error(ErrorCode::kConstructionFailure, std::string(e.what()));
    }
  }
}

}  // namespace vpbox
