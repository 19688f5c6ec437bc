#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vpbox/io.hpp"
#include "vpbox/speed.hpp"
#include "vpbox/stream.hpp"
#include "vpbox/track.hpp"

namespace vpbox {

struct PipelineConfig {
  VpPair pair = VpPair::kVp2Vp3;
  ImageSize out_size{960, 540};
  int crop_step = 1;
  std::optional<double> fps;  // overrides the detection file
  TrackerConfig tracker;
  double match_window_s = 0.5;
  std::map<int, double> lane_scale;  // per-lane calibration scale override
};

struct TrackReport {
  int id = 0;
  double speed_kmh = 0.0;
  std::optional<double> crossing_time_s;
  std::optional<int> lane;
  int detections = 0;
  int valid_pairs = 0;
};

struct PipelineCounts {
  int frames = 0;
  int detections = 0;
  int invalid_geometry = 0;  // detections no cuboid matches
  int edge_boxes_removed = 0;
  int dropped_short = 0;
  int dropped_static = 0;
  int dropped_unmeasurable = 0;  // fewer than two usable detections
};

struct Report {
  std::string video;
  double fps = 0.0;
  VpPair pair = VpPair::kVp2Vp3;
  double coverage = 0.0;
  int crop_rows = 0;
  std::vector<TrackReport> tracks;
  PipelineCounts counts;
  std::optional<Evaluation> evaluation;  // present when ground truth was given
};

// Track -> speed -> report on an already built view. Crossing times and lanes
// need the ground truth's measurement line and lane polygons; without it they
// stay empty.
Report run_pipeline(const CameraCalibration& calib, const RectifiedView& view,
                    const DetectionStream& stream, const PipelineConfig& cfg,
                    const GroundTruth* gt = nullptr, std::string video = {});

// Builds the view first. Throws ConstructionFailure.
Report run_pipeline(const CameraCalibration& calib, const RoadMask& mask,
                    const DetectionStream& stream, const PipelineConfig& cfg,
                    const GroundTruth* gt = nullptr, std::string video = {});

struct VideoJob {
  std::string name;
  std::filesystem::path calib;
  std::filesystem::path mask;
  std::filesystem::path detections;
  std::optional<std::filesystem::path> gt;
};

Report run_job(const VideoJob& job, const PipelineConfig& cfg);

// {"videos": [{"name", "calib", "mask", "detections", "gt"?}]}; relative paths
// are resolved against the manifest's directory.
std::vector<VideoJob> read_manifest(const std::filesystem::path& path);

struct JobResult {
  std::optional<Report> report;
  std::string error_name;  // set on failure
  std::string error_message;
  int exit_code = 0;
};

// Runs independent videos on `threads` workers (0 = hardware concurrency).
// Results are in job order.
std::vector<JobResult> run_batch(const std::vector<VideoJob>& jobs, const PipelineConfig& cfg,
                                 int threads = 0);

Json to_json(const Report& r);
Json to_json(const VideoMetrics& m);
std::string report_csv(const Report& r);

// Writes <stem>.json and, on request, <stem>.csv plus SVG plots
// (<stem>_errors.svg: histogram of speed errors; <stem>_videos.svg: per-video
// error bars). Throws IOError.
void emit_report(const std::vector<Report>& reports, const std::filesystem::path& stem, bool csv,
                 bool plots);

// Mean statistics over the reports that carry an evaluation.
std::optional<VideoMetrics> aggregate_reports(const std::vector<Report>& reports);

}  // namespace vpbox
