#include "vpbox/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>


#include "vpbox/error.hpp"

namespace vpbox {

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

// World Y of the road point seen at pixel p.
double ground_y(const SceneCamera& cam, ImagePoint p) {
  const Eigen::Vector3d ray =
      cam.rotation().transpose() *
      Eigen::Vector3d(p.x - cam.image_size.width / 2.0, p.y - cam.image_size.height / 2.0, cam.focal);
  if (!(ray.z() < 0.0)) throw Error(ErrorCode::kHorizonPoint, "pixel does not see the road");
  return cam.center().y() - cam.center().z() / ray.z() * ray.y();
}

}  // namespace

Eigen::Matrix3d SceneCamera::rotation() const {
  const double y = rad(yaw_deg), p = rad(pitch_deg), r = rad(roll_deg);
  const Eigen::Vector3d z(std::sin(y) * std::cos(p), std::cos(y) * std::cos(p), -std::sin(p));
  const Eigen::Vector3d x0(std::cos(y), -std::sin(y), 0.0);
  const Eigen::Vector3d x = std::cos(r) * x0 + std::sin(r) * z.cross(x0);
  Eigen::Matrix3d m;
  m.row(0) = x;
  m.row(1) = z.cross(x);
  m.row(2) = z;
  return m;
}

Eigen::Vector3d SceneCamera::to_camera(const Eigen::Vector3d& world) const {
  return rotation() * (world - center());
}

ImagePoint SceneCamera::project(const Eigen::Vector3d& world) const {
  const Eigen::Vector3d c = to_camera(world);
  if (!(c.z() > 1e-6)) throw Error(ErrorCode::kPointAtInfinity, "point is behind the camera");
  return {image_size.width / 2.0 + focal * c.x() / c.z(),
          image_size.height / 2.0 + focal * c.y() / c.z()};
}

ImagePoint SceneCamera::vanishing_point(const Eigen::Vector3d& direction) const {
  const Eigen::Vector3d d = rotation() * direction;
  if (std::abs(d.z()) < 1e-9 * d.norm()) {
    throw Error(ErrorCode::kSceneConstructionFailure, "vanishing point at infinity");
  }
  return {image_size.width / 2.0 + focal * d.x() / d.z(),
          image_size.height / 2.0 + focal * d.y() / d.z()};
}

CameraCalibration SceneCamera::calibration() const {
  return CameraCalibration::from_vps(vanishing_point(Eigen::Vector3d::UnitY()),
                                     vanishing_point(Eigen::Vector3d::UnitX()), height_m,
                                     image_size);
}

namespace {

struct Corner {
  Eigen::Vector3d world;
  ImagePoint rect;
};

// Face corners ordered TL, TR, BR, BL by rectified position.
std::array<Corner, 4> order_face(std::array<Corner, 4> f) {
  std::sort(f.begin(), f.end(), [](const Corner& a, const Corner& b) { return a.rect.y < b.rect.y; });
  if (f[0].rect.x > f[1].rect.x) std::swap(f[0], f[1]);
  if (f[2].rect.x < f[3].rect.x) std::swap(f[2], f[3]);
  return f;
}

Box2D face_bounds(const std::array<Corner, 4>& f) {
  Box2D b{f[0].rect.x, f[0].rect.y, f[0].rect.x, f[0].rect.y};
  for (const auto& c : f) {
    b.x_min = std::min(b.x_min, c.rect.x);
    b.y_min = std::min(b.y_min, c.rect.y);
    b.x_max = std::max(b.x_max, c.rect.x);
    b.y_max = std::max(b.y_max, c.rect.y);
  }
  return b;
}

// The cuboid as seen in the rectified view, or nullopt when it is not fully
// visible there.
std::optional<TrueBox> rectified_box(const SyntheticScene& s, const RectifiedView& view,
                                     const Eigen::Vector3d& ground_center, const VehicleSpec& v) {
  std::array<std::array<Corner, 4>, 2> faces;
  for (int i = 0; i < 8; ++i) {
    const int sx = i & 1, sy = (i >> 1) & 1, sz = (i >> 2) & 1;
    const Eigen::Vector3d w = ground_center + Eigen::Vector3d((sx - 0.5) * v.width_m,
                                                              (sy - 0.5) * v.length_m,
                                                              sz * v.height_m);
    if (!(s.camera.to_camera(w).z() > 0.5)) return std::nullopt;
    // VP2-VP3 views keep the front and rear faces axis-aligned, VP1-VP2 views
    // the roof and floor.
    const int face = s.pair == VpPair::kVp2Vp3 ? sy : sz;
    const int slot = s.pair == VpPair::kVp2Vp3 ? (sx | sz << 1) : (sx | sy << 1);
    try {
      faces[face][slot] = {w, view.h.apply(s.camera.project(w))};
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  for (auto& f : faces) f = order_face(f);
  const Box2D b0 = face_bounds(faces[0]), b1 = face_bounds(faces[1]);
  const bool first_near = b0.width() >= b1.width();
  const auto& near = first_near ? faces[0] : faces[1];
  const auto& far = first_near ? faces[1] : faces[0];
  const Box2D nb = first_near ? b0 : b1;
  const Box2D fb = first_near ? b1 : b0;

  TrueBox t;
  t.rect = {nb, fb.width() / nb.width(), view.vpu};
  const Box2D e = t.rect.enclosing_box();
  if (e.x_min < 0.0 || e.y_min < 0.0 || e.x_max > view.out_size.width ||
      e.y_max > view.out_size.height) {
    return std::nullopt;
  }
  if (view.vpu.y >= e.y_min && view.vpu.y <= e.y_max) return std::nullopt;

  for (int i = 0; i < 4; ++i) {
    t.image.vertices[i] = s.camera.project(near[i].world);
    t.image.vertices[4 + i] = s.camera.project(far[i].world);
  }
  t.image.vpu_above = t.rect.vpu_above();
  const auto& edge = t.image.vpu_above ? near : far;
  t.reference_world = 0.5 * (edge[2].world + edge[3].world);
  t.reference = s.camera.project(t.reference_world);
  return t;
}

}  // namespace

Simulation simulate(const SyntheticScene& scene, std::uint64_t seed, double duration_s) {
  if (!(scene.fps > 0.0) || !(duration_s >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fps must be positive and duration nonnegative");
  }
  if (scene.lanes.empty()) throw Error(ErrorCode::kInvalidArgument, "scene has no lanes");
  const auto& cam = scene.camera;

  Simulation sim;
  double x_left = scene.lanes[0].x_min, x_right = scene.lanes[0].x_max;
  for (const auto& l : scene.lanes) {
    x_left = std::min(x_left, l.x_min);
    x_right = std::max(x_right, l.x_max);
  }
  auto ground = [&](double x, double y) { return cam.project({x, y, 0.0}); };
  try {
    sim.calib = cam.calibration();
    const double ml = x_left - scene.shoulder_m, mr = x_right + scene.shoulder_m;
    sim.road_polygon = {ground(ml, scene.road_y_near), ground(mr, scene.road_y_near),
                        ground(mr, scene.road_y_far), ground(ml, scene.road_y_far)};
    sim.mask = RoadMask::from_polygon(sim.road_polygon, cam.image_size);
    sim.view = build_rectification(*sim.calib, sim.mask, scene.pair, scene.out_size);
    sim.measure_y = scene.measure_y ? *scene.measure_y
                                    : ground_y(cam, sim.view.h.apply_inverse(
                                                        {scene.out_size.width / 2.0,
                                                         0.75 * scene.out_size.height}));
    sim.gt.measurement_line = {ground(x_left, sim.measure_y), ground(x_right, sim.measure_y)};
    for (const auto& l : scene.lanes) {
      sim.gt.lanes.push_back({l.id,
                              {ground(l.x_min, scene.road_y_near), ground(l.x_max, scene.road_y_near),
                               ground(l.x_max, scene.road_y_far), ground(l.x_min, scene.road_y_far)}});
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::kSceneConstructionFailure, e.what());
  }
  sim.stream.fps = scene.fps;
  sim.stream.space = CoordinateSpace::kRectified;

  struct Live {
    const VehicleSpec* spec;
    const LaneSpec* lane;
    double start;  // Y of the front at entry
  };
  std::vector<Live> vehicles;
  for (const auto& v : scene.vehicles) {
    const auto lane = std::find_if(scene.lanes.begin(), scene.lanes.end(),
                                   [&](const LaneSpec& l) { return l.id == v.lane; });
    if (lane == scene.lanes.end() || !(v.speed_kmh > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "vehicle " + std::to_string(v.id) +
                                                   " needs a known lane and a positive speed");
    }
    const double start = lane->direction > 0 ? scene.road_y_near : scene.road_y_far;
    vehicles.push_back({&v, &*lane, start});
    const double mps = v.speed_kmh / 3.6;
    // Crossing of the reference edge, the bottom edge nearest the camera: the
    // rear for vehicles driving away, the front for oncoming ones.
    const double lag = lane->direction > 0 ? v.length_m / mps : 0.0;
    const double t = v.entry_s + lane->direction * (sim.measure_y - start) / mps + lag;
    if (t >= 0.0 && t < duration_s) sim.gt.vehicles.push_back({v.id, v.lane, t, v.speed_kmh});
  }
  std::sort(sim.gt.vehicles.begin(), sim.gt.vehicles.end(),
            [](const auto& a, const auto& b) { return a.time_s < b.time_s; });

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& noise = scene.noise;
  const double margin = 60.0;

  const int frames = static_cast<int>(std::floor(duration_s * scene.fps));
  for (int f = 0; f < frames; ++f) {
    const double t = f / scene.fps;
    FrameTruth truth{f, {}};
    FrameDetections dets{f, {}};
    for (const auto& live : vehicles) {
      const VehicleSpec& v = *live.spec;
      const int dir = live.lane->direction;
      const double front = live.start + dir * (v.speed_kmh / 3.6) * (t - v.entry_s);
      const double yc = front - dir * v.length_m / 2.0;
      if (yc < scene.road_y_near - margin || yc > scene.road_y_far + margin) continue;
      const Eigen::Vector3d gc(0.5 * (live.lane->x_min + live.lane->x_max), yc, 0.0);
      auto box = rectified_box(scene, sim.view, gc, v);
      if (!box) continue;
      box->vehicle = v.id;

      if (noise.dropout > 0.0 && unit(rng) < noise.dropout) {
        truth.boxes.push_back(*box);
        continue;
      }
      CcBox cb = parametrize(box->rect);
      if (noise.sigma_px > 0.0) {
        const double h = cb.box.height();
        cb.box.x_min += noise.sigma_px * gauss(rng);
        cb.box.y_min += noise.sigma_px * gauss(rng);
        cb.box.x_max += noise.sigma_px * gauss(rng);
        cb.box.y_max += noise.sigma_px * gauss(rng);
        cb.cc = std::clamp(cb.cc + noise.sigma_px / h * gauss(rng), 0.0, 1.0);
      }
      truth.boxes.push_back(*box);
      if (!cb.box.valid()) continue;
      StreamDetection d;
      d.ccbox = cb;
      d.corners = unwarp_corners(cb.box, sim.view.h);
      dets.detections.push_back(d);
    }
    if (!truth.boxes.empty()) sim.truth.push_back(std::move(truth));
    if (!dets.detections.empty()) sim.stream.frames.push_back(std::move(dets));
  }
  return sim;
}

GeneratedScene generate_scene(const SceneOptions& opts, std::uint64_t seed) {
  if (opts.lanes <= 0 || opts.vehicles < 0 || !(opts.min_speed_kmh > 0.0) ||
      opts.max_speed_kmh < opts.min_speed_kmh) {
    throw Error(ErrorCode::kInvalidArgument, "invalid scene options");
  }
  GeneratedScene g;
  SyntheticScene& s = g.scene;
  for (int i = 0; i < opts.lanes; ++i) {
    s.lanes.push_back({i, i * opts.lane_width_m, (i + 1) * opts.lane_width_m,
                       opts.mixed_directions && i == 0 ? -1 : 1});
  }

  std::mt19937_64 rng(seed ^ 0x5ce7e5eedULL);
  std::uniform_real_distribution<double> speed(opts.min_speed_kmh, opts.max_speed_kmh);
  std::uniform_real_distribution<double> jitter(0.0, 2.0);
  std::uniform_int_distribution<int> lane_pick(0, opts.lanes - 1);
  std::uniform_real_distribution<double> len(3.8, 5.2), wid(1.6, 2.0), hgt(1.3, 1.8);

  // A follower must not catch up with its leader before the leader leaves the
  // road, or the boxes would merge.
  const double road = s.road_y_far - s.road_y_near + 40.0;
  struct Last {
    double entry = -1e9;
    double mps = 1.0;
  };
  std::vector<Last> last(opts.lanes);
  double end = 0.0;
  for (int i = 0; i < opts.vehicles; ++i) {
    VehicleSpec v;
    v.id = i;
    v.lane = lane_pick(rng);
    v.speed_kmh = speed(rng);
    v.length_m = len(rng);
    v.width_m = wid(rng);
    v.height_m = hgt(rng);
    const double mps = v.speed_kmh / 3.6;
    Last& prev = last[v.lane];
    const double catch_gap = road / prev.mps - (road - 15.0) / mps;
    v.entry_s = std::max(prev.entry + std::max(opts.min_gap_s + jitter(rng), catch_gap), 0.5);
    prev = {v.entry_s, mps};
    s.vehicles.push_back(v);
    end = std::max(end, v.entry_s + road / mps);
  }
  g.duration_s = end + 1.0;
  return g;
}

SceneCamera random_camera(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xca3e7aULL);
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  SceneCamera c;
  c.focal = u(1200.0, 2200.0);
  c.yaw_deg = u(3.0, 10.0) * (u(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
  c.pitch_deg = u(9.0, 16.0);
  c.roll_deg = u(-2.0, 2.0);
  c.height_m = u(6.0, 12.0);
  // Over a three-lane road at X in [0, 10.5].
  c.lateral_m = u(1.5, 9.0);
  return c;
}

}  // namespace vpbox
