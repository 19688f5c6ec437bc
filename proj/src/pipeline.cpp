#include "vpbox/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "vpbox/error.hpp"

namespace vpbox {

namespace fs = std::filesystem;

Report run_pipeline(const CameraCalibration& calib, const RectifiedView& view,
                    const DetectionStream& stream, const PipelineConfig& cfg,
                    const GroundTruth* gt, std::string video) {
  Report r;
  r.video = std::move(video);
  r.fps = cfg.fps.value_or(stream.fps);
  if (!(r.fps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "frame rate unknown; pass --fps");
  r.pair = view.pair;
  r.coverage = view.coverage;
  r.crop_rows = view.crop_rows;

  Tracker tracker(cfg.tracker);
  std::vector<CcBox> boxes;
  for (const auto& f : stream.frames) {
    ++r.counts.frames;
    boxes.clear();
    for (const auto& d : f.detections) {
      ++r.counts.detections;
      CcBox cb = d.ccbox;
      if (stream.space == CoordinateSpace::kOriginal) cb.box = warp_corners(d.corners, view.h);
      // Boxes no cuboid fits are false positives.
      if (!try_reconstruct(cb, view.vpu)) {
        ++r.counts.invalid_geometry;
        continue;
      }
      boxes.push_back(cb);
    }
    tracker.step(f.frame, boxes);
  }
  FinalizeStats stats;
  const std::vector<Track> tracks = tracker.finalize(view.out_size, &stats);
  r.counts.edge_boxes_removed = stats.edge_boxes_removed;
  r.counts.dropped_short = stats.dropped_short;
  r.counts.dropped_static = stats.dropped_static;

  std::optional<RoadLine> line;
  if (gt) line = road_line(gt->measurement_line[0], gt->measurement_line[1], calib);

  std::vector<Measurement> measured;
  for (const auto& t : tracks) {
    TrackSpeed ts;
    try {
      ts = measure_track(t, calib, view, r.fps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientDetections) throw;
      ++r.counts.dropped_unmeasurable;
      continue;
    }
    TrackReport tr;
    tr.id = t.id;
    tr.speed_kmh = ts.speed_kmh;
    tr.detections = static_cast<int>(t.detections.size());
    tr.valid_pairs = ts.valid_pairs;
    if (line) {
      if (const auto frame = crossing_frame(ts.positions, *line, calib)) {
        tr.crossing_time_s = *frame / r.fps;
        tr.lane = lane_of(position_at(ts.positions, *frame), gt->lanes);
      }
    }
    if (tr.lane) {
      if (const auto it = cfg.lane_scale.find(*tr.lane); it != cfg.lane_scale.end()) {
        tr.speed_kmh *= it->second / calib.scale();
      }
    }
    r.tracks.push_back(tr);
    measured.push_back({tr.id, tr.speed_kmh, tr.crossing_time_s, tr.lane});
  }
  if (gt) r.evaluation = evaluate(measured, gt->vehicles, cfg.match_window_s);
  return r;
}

Report run_pipeline(const CameraCalibration& calib, const RoadMask& mask,
                    const DetectionStream& stream, const PipelineConfig& cfg,
                    const GroundTruth* gt, std::string video) {
  const RectifiedView view = build_rectification(calib, mask, cfg.pair, cfg.out_size, cfg.crop_step);
  return run_pipeline(calib, view, stream, cfg, gt, std::move(video));
}

Report run_job(const VideoJob& job, const PipelineConfig& cfg) {
  const CameraCalibration calib = read_calibration(job.calib);
  const RoadMask mask = read_mask(job.mask, calib.image_size());
  const RectifiedView view = build_rectification(calib, mask, cfg.pair, cfg.out_size, cfg.crop_step);
  const DetectionStream stream = read_detections(job.detections, &view);
  std::optional<GroundTruth> gt;
  if (job.gt) gt = read_ground_truth(*job.gt);
  return run_pipeline(calib, view, stream, cfg, gt ? &*gt : nullptr, job.name);
}

std::vector<VideoJob> read_manifest(const fs::path& path) {
  const Json j = parse_json(read_text(path), path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  std::vector<VideoJob> jobs;
  try {
    for (const auto& v : j.at("videos")) {
      VideoJob job;
      job.calib = resolve(v.at("calib").get<std::string>());
      job.mask = resolve(v.at("mask").get<std::string>());
      job.detections = resolve(v.at("detections").get<std::string>());
      if (v.contains("gt") && !v["gt"].is_null()) job.gt = resolve(v["gt"].get<std::string>());
      job.name = v.value("name", job.detections.stem().string());
      jobs.push_back(std::move(job));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
  return jobs;
}

std::vector<JobResult> run_batch(const std::vector<VideoJob>& jobs, const PipelineConfig& cfg,
                                 int threads) {
  std::vector<JobResult> results(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      JobResult& res = results[i];
      try {
        res.report = run_job(jobs[i], cfg);
      } catch (const Error& e) {
        res.error_name = error_name(e.code());
        res.error_message = e.detail();
        res.exit_code = exit_code_for(e.code());
      } catch (const std::exception& e) {
        res.error_name = "InternalError";
        res.error_message = e.what();
        res.exit_code = 2;
      }
    }
  };
  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, std::max(1, static_cast<int>(jobs.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  return results;
}

}  // namespace vpbox
