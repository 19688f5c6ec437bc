#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vpbox/calib.hpp"
#include "vpbox/rectify.hpp"
#include "vpbox/track.hpp"

namespace vpbox {

struct Position {
  int frame = 0;
  ImagePoint image;  // reference point, original image px
  RoadPoint road;
};

// Reference points of every usable detection. Detections whose box cannot be
// reconstructed or whose reference point is above the horizon are skipped and
// counted in `skipped`.
std::vector<Position> track_positions(const Track& track, const CameraCalibration& calib,
                                      const RectifiedView& view, int* skipped = nullptr);

// 3.6 * scale * |dX| * fps / dframes for consecutive positions, km/h.
std::vector<double> interframe_speeds(std::span<const Position> positions,
                                      const CameraCalibration& calib, double fps);
// Throws InsufficientDetections when fewer than two detections are usable.
std::vector<double> interframe_speeds(const Track& track, const CameraCalibration& calib,
                                      const RectifiedView& view, double fps);

// Median; even counts average the central pair. Throws EmptyList.
double track_speed(std::span<const double> speeds);

struct TrackSpeed {
  int track_id = 0;
  double speed_kmh = 0.0;
  std::vector<Position> positions;
  int valid_pairs = 0;
  int skipped = 0;
};

// Throws InsufficientDetections.
TrackSpeed measure_track(const Track& track, const CameraCalibration& calib,
                         const RectifiedView& view, double fps);

// Measurement line on the road: both image endpoints are projected onto the
// road plane.
struct RoadLine {
  RoadPoint a;
  RoadPoint b;
};
RoadLine road_line(ImagePoint p, ImagePoint q, const CameraCalibration& calib);

// Signed in-plane distance from the line, road-plane units.
double signed_distance(const RoadLine& line, const RoadPoint& x, const CameraCalibration& calib);

// Fractional frame at which the positions pass the line: linear interpolation
// across the first sign change, otherwise a least-squares extrapolation of the
// signed distance. nullopt for fewer than two positions or no motion across it.
std::optional<double> crossing_frame(std::span<const Position> positions, const RoadLine& line,
                                     const CameraCalibration& calib);

// Image position at a fractional frame, interpolated between neighbours and
// clamped to the track ends.
ImagePoint position_at(std::span<const Position> positions, double frame);

struct Lane {
  int id = 0;
  std::vector<ImagePoint> polygon;  // original image px
};

// Id of the first lane whose polygon contains p (even-odd rule).
std::optional<int> lane_of(ImagePoint p, std::span<const Lane> lanes);

struct Measurement {
  int id = 0;
  double speed_kmh = 0.0;
  std::optional<double> time_s;
  std::optional<int> lane;
};

struct GroundTruthRecord {
  int id = 0;
  int lane = 0;
  double time_s = 0.0;
  double speed_kmh = 0.0;
};

struct MatchedPair {
  int measured_id = 0;
  int gt_id = 0;
  double measured_kmh = 0.0;
  double gt_kmh = 0.0;
};

struct VideoMetrics {
  double mean_abs_err = 0.0;
  double median_abs_err = 0.0;
  double p95_abs_err = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  int matched = 0;
  int n_gt = 0;
  int n_measured = 0;
};

struct Evaluation {
  VideoMetrics metrics;
  std::vector<MatchedPair> pairs;
};

// Nearest-rank percentile, q in (0, 1]. Throws EmptyList.
double percentile_nearest_rank(std::vector<double> values, double q);

// One-to-one greedy matching by smallest time difference among pairs in the
// same lane and within `window_s`. Error statistics are zero when nothing
// matches.
Evaluation evaluate(std::span<const Measurement> measured, std::span<const GroundTruthRecord> gt,
                    double window_s = 0.5);

// Unweighted mean of each statistic across videos; counts are summed. Throws
// EmptyList.
VideoMetrics aggregate(std::span<const VideoMetrics> per_video);

}  // namespace vpbox
