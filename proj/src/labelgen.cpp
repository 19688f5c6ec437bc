#include "vpbox/labelgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <unordered_map>

#include "vpbox/error.hpp"

namespace vpbox {

Box2D bbox_of_mask(std::span<const ImagePoint> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyMask, "mask has no foreground");
  const Bounds b = bounds_of(points);
  if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
    throw Error(ErrorCode::kDegenerateBox, "mask bounds have zero area");
  }
  return {b.x_min, b.y_min, b.x_max, b.y_max};
}

std::vector<ImagePoint> warp_instance(const InstanceMask& mask, const Homography& h) {
  std::unordered_map<int, std::pair<int, int>> rows;
  for (const auto& [x, y] : mask.pixels) {
    auto [it, fresh] = rows.try_emplace(y, x, x);
    if (!fresh) {
      it->second.first = std::min(it->second.first, x);
      it->second.second = std::max(it->second.second, x);
    }
  }
  std::vector<ImagePoint> out;
  out.reserve(rows.size() * 4);
  for (const auto& [y, span] : rows) {
    const double y0 = y, y1 = y + 1.0;
    const double x0 = span.first, x1 = span.second + 1.0;
    for (ImagePoint p : {ImagePoint{x0, y0}, {x0, y1}, {x1, y0}, {x1, y1}}) out.push_back(h.apply(p));
  }
  return out;
}

namespace {

enum class Side { kVertical, kHorizontal };

struct Hit {
  ImagePoint p;
  Side side;
};

// Clips the line vpu + t*d to the box and returns the entry or exit point with
// the box edge it lies on. Vertical edges win ties, so corners count as
// vertical-edge hits.
Hit clip(const Box2D& b, ImagePoint vpu, ImagePoint d, bool want_exit) {
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  Side s_in = Side::kVertical, s_out = Side::kVertical;
  auto slab = [&](double origin, double dir, double lo, double hi, Side side) {
    if (dir == 0.0) return;
    double t0 = (lo - origin) / dir, t1 = (hi - origin) / dir;
    if (t0 > t1) std::swap(t0, t1);
    const double tol = 1e-12 * std::max(1.0, std::abs(t0) + std::abs(t1));
    if (t0 > t_in + tol || (side == Side::kVertical && t0 >= t_in - tol)) t_in = t0, s_in = side;
    if (t1 < t_out - tol || (side == Side::kVertical && t1 <= t_out + tol)) t_out = t1, s_out = side;
  };
  slab(vpu.y, d.y, b.y_min, b.y_max, Side::kHorizontal);
  slab(vpu.x, d.x, b.x_min, b.x_max, Side::kVertical);
  const double t = want_exit ? t_out : t_in;
  return {vpu + t * d, want_exit ? s_out : s_in};
}

}  // namespace

CcEstimate cc_from_mask(std::span<const ImagePoint> points, ImagePoint vpu) {
  const Box2D b = bbox_of_mask(points);
  if (vpu.y >= b.y_min && vpu.y <= b.y_max) {
    throw Error(ErrorCode::kDegenerateVPU, "VPU is vertically level with the mask");
  }
  const bool above = vpu.y < b.y_min;
  const TangentPair t = tangent_lines(vpu, points);

  CcEstimate est;
  const ImagePoint touches[2] = {t.touch_first, t.touch_second};
  for (int i = 0; i < 2; ++i) {
    // With VPU above the far intersection is a near-face corner; with VPU below
    // the near one is a far-face corner. Either way it lies on the cc line or
    // directly below it.
    const Hit hit = clip(b, vpu, touches[i] - vpu, above);
    double y = hit.p.y;
    if (hit.side == Side::kHorizontal) {
      // The face corner above the hit sits on the line from VPU through a top
      // bbox corner: the one on VPU's side when VPU is above, the one away from
      // it when below.
      const bool vpu_right =
          vpu.x > b.x_max || (vpu.x >= b.x_min && hit.p.x > b.center().x);
      const bool right = above ? vpu_right : !vpu_right;
      const ImagePoint corner{right ? b.x_max : b.x_min, b.y_min};
      const double dx = corner.x - vpu.x;
      y = std::abs(dx) > 1e-12 ? vpu.y + (corner.y - vpu.y) * (hit.p.x - vpu.x) / dx : corner.y;
    }
    est.candidates[i] = (y - b.y_min) / b.height();
  }

  const double cc = above ? std::min(est.candidates[0], est.candidates[1])
                          : std::max(est.candidates[0], est.candidates[1]);
  est.clamped = cc < 0.0 || cc > 1.0;
  est.box = {b, std::clamp(cc, 0.0, 1.0), 1.0};
  return est;
}

LabelBatch generate_labels(std::span<const InstanceMask> masks, const RectifiedView& view) {
  LabelBatch out;
  for (const auto& m : masks) {
    try {
      const auto pts = warp_instance(m, view.h);
      const CcEstimate est = cc_from_mask(pts, view.vpu);
      const Box2D& bb = est.box.box;
      if (bb.x_min < 0.0 || bb.y_min < 0.0 || bb.x_max > view.out_size.width ||
          bb.y_max > view.out_size.height) {
        ++out.skipped["OutOfBounds"];
        continue;
      }
      if (est.clamped) ++out.clamped;
      out.records.push_back({m.frame, m.id, est.box});
    } catch (const Error& e) {
      ++out.skipped[std::string(error_name(e.code()))];
    }
  }
  std::stable_sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
  });
  return out;
}

}  // namespace vpbox
