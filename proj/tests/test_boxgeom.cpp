#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vpbox/boxgeom.hpp"
#include "vpbox/error.hpp"
#include "vpbox/simulate.hpp"

using namespace vpbox;
using doctest::Approx;

namespace {

Box3DRect random_rect(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Box3DRect r;
  const double x = 100 + 600 * u(rng), y = 100 + 300 * u(rng);
  r.near_face = {x, y, x + 20 + 200 * u(rng), y + 20 + 150 * u(rng)};
  r.k = 0.3 + 0.65 * u(rng);
  const bool above = u(rng) < 0.5;
  const double vx = -2000 + 5000 * u(rng);
  r.vpu = {vx, above ? r.near_face.y_min - 50 - 3000 * u(rng) : r.near_face.y_max + 50 + 3000 * u(rng)};
  return r;
}

double max_vertex_error(const std::array<ImagePoint, 8>& a, const std::array<ImagePoint, 8>& b) {
  double e = 0.0;
  for (size_t i = 0; i < 8; ++i) e = std::max(e, distance(a[i], b[i]));
  return e;
}

}  // namespace

TEST_SUITE("boxgeom") {
  TEST_CASE("flat box") {
    Box3DRect r{{10, 10, 50, 40}, 1.0, {-100, -100}};
    const CcBox cb = parametrize(r);
    CHECK(cb.box == r.near_face);
    CHECK(cb.cc == 0.0);
    const Box3DRect back = reconstruct({{10, 10, 50, 40}, 0.0}, {-100, -100});
    CHECK(back.k == Approx(1.0));
    CHECK(back.near_face == r.near_face);
  }

  TEST_CASE("homothety and the enclosing box") {
    const Box3DRect r{{10, 10, 50, 40}, 0.5, {-100, -100}};
    const Box2D f = r.far_face();
    CHECK(f.x_min == Approx(-45));
    CHECK(f.y_min == Approx(-45));
    CHECK(f.x_max == Approx(-25));
    CHECK(f.y_max == Approx(-30));
    // bounds of all 8 vertices, and the cc line as the near face top
    const auto v = r.vertices();
    const Bounds b = bounds_of(v);
    const CcBox cb = parametrize(r);
    CHECK(cb.box.x_min == b.x_min);
    CHECK(cb.box.y_min == b.y_min);
    CHECK(cb.box.x_max == b.x_max);
    CHECK(cb.box.y_max == b.y_max);
    CHECK(cb.cc == Approx((10.0 + 45.0) / (40.0 + 45.0)));
  }

  TEST_CASE("horizontal mirror leaves cc unchanged") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
      const Box3DRect r = random_rect(rng);
      Box3DRect m = r;
      m.near_face = {-r.near_face.x_max, r.near_face.y_min, -r.near_face.x_min, r.near_face.y_max};
      m.vpu.x = -r.vpu.x;
      CHECK(parametrize(m).cc == Approx(parametrize(r).cc).epsilon(1e-12));
    }
  }

  TEST_CASE("reconstruct matches the line-chasing construction") {
    std::mt19937_64 rng(4);
    int vpu_inside = 0;
    for (int t = 0; t < 2000; ++t) {
      const Box3DRect r = random_rect(rng);
      const CcBox cb = parametrize(r);
      const Box3DRect back = reconstruct(cb, r.vpu);
      const auto expect = oracle::construct_box(cb.box, cb.cc, r.vpu);
      CHECK(max_vertex_error(back.vertices(), expect) < 1e-6);
      CHECK(max_vertex_error(back.vertices(), r.vertices()) < 1e-6);
      vpu_inside += r.vpu.x >= cb.box.x_min && r.vpu.x <= cb.box.x_max;
    }
    CHECK(vpu_inside > 0);
  }

  TEST_CASE("reconstruct rejects impossible inputs") {
    auto code = [](const CcBox& cb, ImagePoint vpu) {
      try {
        reconstruct(cb, vpu);
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::kInvalidArgument;
    };
    const Box2D b{100, 100, 200, 180};
    CHECK(code({b, 0.5}, {150, 150}) == ErrorCode::kDegenerateVPU);
    CHECK(code({{100, 100, 100, 180}, 0.5}, {0, 0}) == ErrorCode::kInvalidGeometry);
    CHECK(code({b, 1.5}, {0, 0}) == ErrorCode::kInvalidGeometry);
    // VPU just above and to the right: the deeper the box (larger cc), the
    // more the near face shrinks towards the left edge. Its right edge is
    // 260 - 60/k, which passes x_min = 100 at k = 60/160, i.e. cc = 0.1136.
    const ImagePoint vpu{260, 95};
    const double limit = (95.0 + 5.0 * 160.0 / 60.0 - 100.0) / 80.0;
    for (int i = 0; i <= 1000; ++i) {
      const double cc = i / 1000.0;
      if (std::abs(cc - limit) < 1e-3) continue;
      CAPTURE(cc);
      CHECK(try_reconstruct({b, cc}, vpu).has_value() == (cc < limit));
    }
    CHECK(code({b, 0.9}, vpu) == ErrorCode::kInvalidGeometry);
  }

  TEST_CASE("vertices to the original image") {
    const Box3DRect r{{10, 10, 50, 40}, 0.5, {-100, -100}};
    const Box3DImage id = to_image(r, Homography{});
    CHECK(max_vertex_error(id.vertices, r.vertices()) == 0.0);
    Eigen::Matrix3d m;
    m << 0.9, 0.1, 3, -0.2, 1.2, 7, 1e-4, -3e-4, 1;
    const Homography h(m);
    const Box3DImage img = to_image(r, h);
    std::array<ImagePoint, 8> back;
    for (size_t i = 0; i < 8; ++i) back[i] = warp_point(h, img.vertices[i]);
    CHECK(max_vertex_error(back, r.vertices()) < 1e-9);
  }

  TEST_CASE("synthetic boxes: edge families and reference point") {
    for (VpPair pair : {VpPair::kVp2Vp3, VpPair::kVp1Vp2}) {
      CAPTURE(to_string(pair));
      SyntheticScene scene;
      scene.lanes = {{0, 0.0, 3.5, 1}, {1, 3.5, 7.0, -1}};
      scene.vehicles = {{0, 0, 90.0, 0.0}, {1, 1, 70.0, 0.3}};
      scene.pair = pair;
      const Simulation sim = simulate(scene, 1, 6.0);
      const CameraCalibration& calib = *sim.calib;
      int boxes = 0;
      for (const auto& ft : sim.truth) {
        for (const auto& tb : ft.boxes) {
          ++boxes;
          const Box3DImage img = to_image(tb.rect, sim.view);
          CHECK(max_vertex_error(img.vertices, tb.image.vertices) < 1e-6);
          // the four depth edges meet at the unused VP
          const ImagePoint u = pair_vps(calib, pair).unused;
          for (int i = 0; i < 4; ++i) {
            const Line l = Line::through(img.vertices[i], img.vertices[i + 4]);
            CHECK(std::abs(l.signed_distance(u)) < 1e-6 * std::max(1.0, distance(u, img.vertices[i])));
          }
          const ImagePoint ref = reference_point(img);
          CHECK(distance(ref, tb.reference) < 1e-6);
        }
      }
      CHECK(boxes > 20);
    }
  }

  TEST_CASE("reference point equivariance") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
      Box3DImage b = to_image(random_rect(rng), Homography{});
      // perturb into a general quadrilateral shape through a mild perspective
      Eigen::Matrix3d m;
      m << 1, 0.05, 0, 0.02, 1, 0, 2e-5, 1e-5, 1;
      const Homography h(m);
      for (auto& v : b.vertices) v = h.apply(v);
      const ImagePoint r = reference_point(b);

      Box3DImage moved = b;
      for (auto& v : moved.vertices) v = v + ImagePoint{13.5, -7.25};
      CHECK(distance(reference_point(moved), r + ImagePoint{13.5, -7.25}) < 1e-9);

      Box3DImage mirrored = b;
      for (auto& v : mirrored.vertices) v.x = -v.x;
      const ImagePoint rm = reference_point(mirrored);
      CHECK(rm.x == Approx(-r.x));
      CHECK(rm.y == Approx(r.y));
    }
  }
}
