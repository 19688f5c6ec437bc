#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "vpbox/calib.hpp"
#include "vpbox/rectify.hpp"
#include "vpbox/stream.hpp"

namespace vpbox {

// Pinhole camera over a flat road. World frame: X across the road, Y along it,
// Z up, road at Z = 0. The camera sits at (lateral, 0, height).
struct SceneCamera {
  ImageSize image_size{1920, 1080};
  double focal = 1600.0;
  double yaw_deg = 6.0;     // about Z; must be nonzero so VP2 is finite
  double pitch_deg = 12.0;  // downwards
  double roll_deg = 0.0;
  double height_m = 9.0;
  double lateral_m = 4.0;

  Eigen::Matrix3d rotation() const;  // rows: camera x, y, z axes in world frame
  Eigen::Vector3d center() const { return {lateral_m, 0.0, height_m}; }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const;
  // Throws PointAtInfinity for points behind the camera.
  ImagePoint project(const Eigen::Vector3d& world) const;
  ImagePoint vanishing_point(const Eigen::Vector3d& direction) const;
  // VPs of the road axes; scale = camera height, since the plane offset is the
  // camera's distance to the road.
  CameraCalibration calibration() const;
};

struct LaneSpec {
  int id = 0;
  double x_min = 0.0;
  double x_max = 3.5;
  int direction = 1;  // +1 away from the camera, -1 towards it
};

struct VehicleSpec {
  int id = 0;
  int lane = 0;
  double speed_kmh = 90.0;
  double entry_s = 0.0;  // time the front reaches the road start
  double width_m = 1.8;
  double length_m = 4.5;
  double height_m = 1.5;
};

struct NoiseModel {
  double sigma_px = 0.0;    // on each box coordinate; cc gets sigma / box height
  double dropout = 0.0;     // probability a detection is missing
};

struct SyntheticScene {
  SceneCamera camera;
  std::vector<LaneSpec> lanes;
  double road_y_near = 12.0;
  double road_y_far = 100.0;
  double shoulder_m = 1.5;  // mask margin beyond the outer lanes
  // Y of the measurement line. When unset it is placed on the road under the
  // rectified point (W/2, 3H/4), so it falls where vehicles are detected.
  std::optional<double> measure_y;
  std::vector<VehicleSpec> vehicles;
  NoiseModel noise;
  VpPair pair = VpPair::kVp2Vp3;
  ImageSize out_size{960, 540};
  double fps = 50.0;
};

struct TrueBox {
  int vehicle = 0;
  Box3DRect rect;
  Box3DImage image;         // projected world corners, winding of rect.vertices()
  ImagePoint reference;     // projected world midpoint of the reference edge
  Eigen::Vector3d reference_world = Eigen::Vector3d::Zero();
};

struct FrameTruth {
  int frame = 0;
  std::vector<TrueBox> boxes;
};

struct Simulation {
  std::optional<CameraCalibration> calib;
  std::vector<ImagePoint> road_polygon;
  RoadMask mask;
  RectifiedView view;
  DetectionStream stream;  // rectified space
  GroundTruth gt;
  double measure_y = 0.0;
  std::vector<FrameTruth> truth;  // frames with at least one visible vehicle
};

// Deterministic given the seed. A detection is emitted for every vehicle whose
// rectified box lies inside the rectified image, subject to noise and dropout.
// Throws SceneConstructionFailure when the scene cannot be rectified.
Simulation simulate(const SyntheticScene& scene, std::uint64_t seed, double duration_s);

struct SceneOptions {
  int vehicles = 100;
  int lanes = 3;
  double lane_width_m = 3.5;
  double min_speed_kmh = 60.0;
  double max_speed_kmh = 130.0;
  double min_gap_s = 4.0;
  bool mixed_directions = false;  // first lane runs towards the camera
};

// Standard three-lane scene with random vehicles; returns the scene and the
// duration that lets every vehicle cross the measurement line.
struct GeneratedScene {
  SyntheticScene scene;
  double duration_s = 0.0;
};
GeneratedScene generate_scene(const SceneOptions& opts, std::uint64_t seed);

// Random plausible camera for property tests.
SceneCamera random_camera(std::uint64_t seed);

}  // namespace vpbox
