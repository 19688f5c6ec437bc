#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vpbox/calib.hpp"
#include "vpbox/error.hpp"
#include "vpbox/rectify.hpp"
#include "vpbox/simulate.hpp"

using namespace vpbox;
using doctest::Approx;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no vpbox::Error thrown");
  return ErrorCode::kInvalidArgument;
}

bool same_set(std::vector<ImagePoint> a, std::vector<ImagePoint> b, double tol) {
  if (a.size() != b.size()) return false;
  for (auto p : a) {
    auto it = std::find_if(b.begin(), b.end(), [&](ImagePoint q) { return distance(p, q) <= tol; });
    if (it == b.end()) return false;
    b.erase(it);
  }
  return true;
}

}  // namespace

TEST_SUITE("calib") {
  TEST_CASE("focal from vanishing points") {
    CHECK(focal_from_vps({800, 0}, {-450, 200}, {0, 0}) == Approx(600.0));
    CHECK(focal_from_vps({300, 0}, {-300, 0}, {0, 0}) == Approx(300.0));
    CHECK(code_of([] { focal_from_vps({100, 0}, {50, 0}, {0, 0}); }) ==
          ErrorCode::kNonOrthogonalVPs);
  }

  TEST_CASE("third vanishing point") {
    const ImagePoint v3 = third_vp({800, 0}, {-450, 200}, {0, 0}, 600.0);
    CHECK(v3.x == Approx(-450.0));
    CHECK(v3.y == Approx(-2812.5));
    const ImagePoint s = third_vp({-450, 200}, {800, 0}, {0, 0}, 600.0);
    CHECK(s.x == Approx(v3.x));
    CHECK(s.y == Approx(v3.y));

    // orthogonality residuals of the back-projected rays
    const ImagePoint pp{960, 540};
    const ImagePoint a{960 + 800, 540}, b{960 - 450, 540 + 200};
    const double f = focal_from_vps(a, b, pp);
    const ImagePoint c = third_vp(a, b, pp, f);
    auto ray = [&](ImagePoint p) { return Eigen::Vector3d(p.x - pp.x, p.y - pp.y, f).normalized(); };
    CHECK(std::abs(ray(a).dot(ray(b))) < 1e-9);
    CHECK(std::abs(ray(a).dot(ray(c))) < 1e-9);
    CHECK(std::abs(ray(b).dot(ray(c))) < 1e-9);
  }

  TEST_CASE("vp3 at infinity") {
    // both VPs on a line through pp: d1 x d2 has no z component
    CHECK(code_of([] { third_vp({500, 0}, {-500, 0}, {0, 0}, 500.0); }) ==
          ErrorCode::kVerticalThirdVP);
  }

  TEST_CASE("road projection against a rendered ground point") {
    const SceneCamera cam;
    const CameraCalibration calib = cam.calibration();
    const Eigen::Vector3d g1(2.0, 30.0, 0.0), g2(2.0, 40.0, 0.0);
    const ImagePoint p1 = cam.project(g1), p2 = cam.project(g2);
    const RoadPoint r1 = project_to_road(p1, calib);
    // same ray as the camera-frame point, scaled onto n.X = 1
    const Eigen::Vector3d c1 = cam.to_camera(g1);
    CHECK((r1.xyz.normalized() - c1.normalized()).norm() < 1e-12);
    CHECK(calib.road_normal().dot(r1.xyz) == Approx(1.0));
    CHECK(road_distance(p1, p2, calib) == Approx(10.0).epsilon(1e-9));
    CHECK(road_distance(p1, p1, calib) == 0.0);
    CHECK(road_distance(p1, p2, calib.with_scale(2 * calib.scale())) ==
          Approx(20.0).epsilon(1e-9));
    const ImagePoint back = render_road_point(r1, calib);
    CHECK(distance(back, p1) < 1e-9);
  }

  TEST_CASE("points on the horizon do not reach the road") {
    const CameraCalibration calib = SceneCamera{}.calibration();
    const ImagePoint h = 0.5 * (calib.vp1() + calib.vp2());
    CHECK(code_of([&] { project_to_road(h, calib); }) == ErrorCode::kHorizonPoint);
    const ImagePoint above = h + ImagePoint{0, -50};
    CHECK(code_of([&] { project_to_road(above, calib); }) == ErrorCode::kHorizonPoint);
  }

  TEST_CASE("random pinhole cameras") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
      const oracle::Pinhole cam = oracle::random_pinhole(rng);
      const ImagePoint v1 = cam.vp(Eigen::Vector3d::UnitX());
      const ImagePoint v2 = cam.vp(Eigen::Vector3d::UnitY());
      const ImagePoint v3 = cam.vp(Eigen::Vector3d::UnitZ());
      const double f = focal_from_vps(v1, v2, cam.pp);
      CHECK(f == Approx(cam.f).epsilon(1e-9));
      const ImagePoint e = third_vp(v1, v2, cam.pp, f);
      CHECK(distance(e, v3) <= 1e-9 * std::max(1.0, norm(v3)));
    }
  }
}

TEST_SUITE("geometry") {
  TEST_CASE("line intersections") {
    const auto q = quad_corners(Line::from_coeffs({1, 0, 0}), Line::from_coeffs({1, 0, -1}),
                                Line::from_coeffs({0, 1, 0}), Line::from_coeffs({0, 1, -1}));
    CHECK(same_set({q.begin(), q.end()}, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}, 1e-12));
    // x=0, x=1, y=x, y=x+1
    const auto r = quad_corners(Line::from_coeffs({1, 0, 0}), Line::from_coeffs({1, 0, -1}),
                                Line::from_coeffs({1, -1, 0}), Line::from_coeffs({1, -1, 1}));
    CHECK(same_set({r.begin(), r.end()}, {{0, 0}, {0, 1}, {1, 1}, {1, 2}}, 1e-12));
    CHECK(r[0] == ImagePoint{0, 0});
    CHECK(code_of([] { intersect(Line::from_coeffs({1, 0, 0}), Line::from_coeffs({-1, 0, 3})); }) ==
          ErrorCode::kParallelLines);
  }

  TEST_CASE("homography solve") {
    const std::array<ImagePoint, 4> sq{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    const std::array<ImagePoint, 4> sq2{{{0, 0}, {2, 0}, {2, 2}, {0, 2}}};
    Eigen::Matrix3d m = homography_from_quad(sq, sq).matrix();
    m /= m(2, 2);
    CHECK((m - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    m = homography_from_quad(sq, sq2).matrix();
    m /= m(2, 2);
    CHECK((m - Eigen::Vector3d(2, 2, 1).asDiagonal().toDenseMatrix()).norm() < 1e-12);
    CHECK(code_of([&] {
            homography_from_quad({{{0, 0}, {1, 1}, {2, 2}, {0, 1}}}, sq);
          }) == ErrorCode::kDegenerateQuad);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 100; ++t) {
      std::array<ImagePoint, 4> src, dst;
      for (int i = 0; i < 4; ++i) {
        src[i] = sq[i] + 0.2 * ImagePoint{u(rng), u(rng)};
        dst[i] = 100.0 * sq2[i] + 20.0 * ImagePoint{u(rng), u(rng)};
      }
      const Homography h = homography_from_quad(src, dst);
      for (int i = 0; i < 4; ++i) CHECK(distance(h.apply(src[i]), dst[i]) < 1e-9);
    }
  }

  TEST_CASE("warp and unwarp") {
    const Homography id;
    CHECK(id.apply({3, 4}) == ImagePoint{3, 4});
    const Homography s(Eigen::Vector3d(2, 2, 1).asDiagonal().toDenseMatrix());
    CHECK(distance(s.apply({3, 4}), {6, 8}) < 1e-15);

    Eigen::Matrix3d m;
    m << 1.1, 0.2, 5, -0.1, 0.9, 3, 1e-4, 2e-4, 1;
    const Homography h(m);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const ImagePoint p{u(rng), u(rng)};
      worst = std::max(worst, distance(unwarp_point(h, warp_point(h, p)), p));
    }
    CHECK(worst < 1e-9);

    // Jacobian against central differences
    const ImagePoint p{400, 300};
    const Eigen::Matrix2d j = h.jacobian(p);
    const double e = 1e-4;
    const ImagePoint dx = (1.0 / (2 * e)) * (h.apply(p + ImagePoint{e, 0}) - h.apply(p - ImagePoint{e, 0}));
    const ImagePoint dy = (1.0 / (2 * e)) * (h.apply(p + ImagePoint{0, e}) - h.apply(p - ImagePoint{0, e}));
    CHECK(j(0, 0) == Approx(dx.x).epsilon(1e-6));
    CHECK(j(1, 0) == Approx(dx.y).epsilon(1e-6));
    CHECK(j(0, 1) == Approx(dy.x).epsilon(1e-6));
    CHECK(j(1, 1) == Approx(dy.y).epsilon(1e-6));
  }

  TEST_CASE("convex hull against the brute-force extreme-point test") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> u(0, 30);
    for (int t = 0; t < 40; ++t) {
      std::vector<ImagePoint> pts;
      for (int i = 0; i < 18; ++i) pts.push_back({double(u(rng)), double(u(rng))});
      std::vector<ImagePoint> expect;
      for (size_t i = 0; i < pts.size(); ++i) {
        // duplicates: keep one copy when it is extreme among the rest
        if (std::find(expect.begin(), expect.end(), pts[i]) != expect.end()) continue;
        std::vector<ImagePoint> rest;
        for (size_t j = 0; j < pts.size(); ++j) {
          if (j == i || pts[j] != pts[i]) rest.push_back(pts[j]);
        }
        const size_t idx = std::find(rest.begin(), rest.end(), pts[i]) - rest.begin();
        if (oracle::is_extreme(rest, idx)) expect.push_back(pts[i]);
      }
      const auto hull = convex_hull(pts);
      CHECK(same_set(hull, expect, 0.0));
      for (auto p : pts) CHECK(in_convex_polygon(hull, p));
    }
  }
}

TEST_SUITE("rectify") {
  TEST_CASE("tangent lines from a vanishing point") {
    std::vector<ImagePoint> sq{{10, 10}, {20, 10}, {20, 20}, {10, 20}};
    TangentPair t = tangent_lines({0, -100}, sq);
    CHECK(same_set({t.touch_first, t.touch_second}, {{10, 20}, {20, 10}}, 1e-12));
    t = tangent_lines({15, -100}, sq);
    CHECK(same_set({t.touch_first, t.touch_second}, {{10, 10}, {20, 10}}, 1e-12));
    for (auto p : sq) {
      CHECK(t.first.signed_distance(p) >= -1e-9);
      CHECK(t.second.signed_distance(p) >= -1e-9);
    }
    const std::vector<ImagePoint> one{{7, 7}};
    t = tangent_lines({0, -100}, one);
    CHECK(std::abs(t.first.signed_distance({7, 7})) < 1e-9);
    CHECK(std::abs(t.second.signed_distance({7, 7})) < 1e-9);
    CHECK(code_of([&] { tangent_lines({15, 15}, sq); }) == ErrorCode::kVPInsideMask);
  }

  TEST_CASE("mask raster") {
    const std::vector<ImagePoint> poly{{2, 2}, {8, 2}, {8, 6}, {2, 6}};
    const RoadMask m = RoadMask::from_polygon(poly, {10, 8});
    CHECK(m.count() == 24);
    CHECK(m.top_row() == 2);
    CHECK(m.bottom_row() == 5);
    CHECK(m.contains(2, 2));
    CHECK_FALSE(m.contains(8, 2));
    const RoadMask c = m.cropped_bottom(2);
    CHECK(c.bottom_row() == 3);
    CHECK(c.count() == 12);
    const auto hull = m.hull();
    CHECK(same_set(hull, poly, 0.0));
  }

  TEST_CASE("synthetic straight road: coverage and ideal points") {
    for (VpPair pair : {VpPair::kVp2Vp3, VpPair::kVp1Vp2}) {
      CAPTURE(to_string(pair));
      SyntheticScene scene;
      scene.lanes = {{0, 0.0, 3.5, 1}, {1, 3.5, 7.0, 1}, {2, 7.0, 10.5, 1}};
      scene.pair = pair;
      const Simulation sim = simulate(scene, 1, 0.0);
      const RectifiedView& v = sim.view;
      CHECK(v.coverage >= kMinCoverage);
      CHECK(mask_coverage(v.h, sim.mask.cropped_bottom(v.crop_rows), v.out_size) ==
            Approx(v.coverage));
      const PairVps vps = pair_vps(*sim.calib, pair);
      const Eigen::Vector3d hz = v.h.apply_h(homogeneous(vps.horizontal)).normalized();
      const Eigen::Vector3d vt = v.h.apply_h(homogeneous(vps.vertical)).normalized();
      CHECK(std::abs(hz.z()) < 1e-9);
      CHECK(std::abs(hz.y()) < 1e-9);
      CHECK(std::abs(vt.z()) < 1e-9);
      CHECK(std::abs(vt.x()) < 1e-9);
      // VPU is the image of the unused VP
      CHECK(distance(v.h.apply(vps.unused), v.vpu) < 1e-6 * std::max(1.0, norm(v.vpu)));

      // fixpoint: a mask already cropped far enough needs no further cropping
      const RectifiedView again = build_rectification(*sim.calib, sim.mask.cropped_bottom(v.crop_rows),
                                                      pair, v.out_size, 1);
      CHECK(again.crop_rows == 0);
      CHECK(again.coverage == Approx(v.coverage));
    }
  }

  TEST_CASE("mask crossing the horizon cannot be rectified") {
    const SceneCamera cam;
    const CameraCalibration calib = cam.calibration();
    // square around the horizon point at the image's center column
    const ImagePoint d = calib.vp2() - calib.vp1();
    const ImagePoint h = calib.vp1() + ((960.0 - calib.vp1().x) / d.x) * d;
    const std::vector<ImagePoint> poly{h + ImagePoint{-200, -200}, h + ImagePoint{200, -200},
                                       h + ImagePoint{200, 200}, h + ImagePoint{-200, 200}};
    std::vector<ImagePoint> clipped;
    for (auto p : poly) clipped.push_back({std::clamp(p.x, 0.0, 1919.0), std::clamp(p.y, 0.0, 1079.0)});
    const RoadMask m = RoadMask::from_polygon(clipped, calib.image_size());
    REQUIRE_FALSE(m.empty());
    CHECK(code_of([&] { build_rectification(calib, m, VpPair::kVp1Vp2, {960, 540}); }) ==
          ErrorCode::kConstructionFailure);
  }

  TEST_CASE("pair names") {
    CHECK(parse_vp_pair("vp1vp2") == VpPair::kVp1Vp2);
    CHECK(parse_vp_pair("VP2-VP3") == VpPair::kVp2Vp3);
    CHECK(code_of([] { parse_vp_pair("vp1vp3"); }) == ErrorCode::kInvalidArgument);
    CHECK(to_string(VpPair::kVp2Vp3) == "VP2-VP3");
  }
}
