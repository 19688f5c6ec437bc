// Command-line front end: one subcommand per pipeline stage plus `run`, which
// chains them, and `simulate`, which writes a synthetic scene to disk.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>

#include "CLI11.hpp"
#include "vpbox/error.hpp"
#include "vpbox/io.hpp"
#include "vpbox/labelgen.hpp"
#include "vpbox/losses.hpp"
#include "vpbox/pipeline.hpp"
#include "vpbox/simulate.hpp"

using namespace vpbox;
namespace fs = std::filesystem;

namespace {

ImageSize parse_size(const std::string& s) {
  static const std::regex re(R"((\d+)[xX](\d+))");
  std::smatch m;
  if (!std::regex_match(s, m, re)) {
    throw Error(ErrorCode::kInvalidArgument, "size must look like 960x540, got '" + s + "'");
  }
  return {std::stoi(m[1]), std::stoi(m[2])};
}

// Options shared by the subcommands that build a view.
struct ViewOptions {
  std::string pair = "vp2vp3";
  std::string out_size = "960x540";
  int crop_step = 1;

  void add(CLI::App* app) {
    app->add_option("--pair", pair, "VP pair for the rectification: vp1vp2 or vp2vp3")
        ->capture_default_str();
    app->add_option("--out-size", out_size, "Rectified image size WxH")->capture_default_str();
    app->add_option("--crop-step", crop_step, "Mask rows cropped per coverage iteration")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
  void apply(PipelineConfig& cfg) const {
    cfg.pair = parse_vp_pair(pair);
    cfg.out_size = parse_size(out_size);
    cfg.crop_step = crop_step;
  }
};

// Either --view, or --calib + --mask to build one.
RectifiedView load_view(const std::string& view_path, const std::string& calib_path,
                        const std::string& mask_path, const ViewOptions& vo) {
  if (!view_path.empty()) return read_view(view_path);
  if (calib_path.empty() || mask_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need --view, or --calib and --mask");
  }
  PipelineConfig cfg;
  vo.apply(cfg);
  const CameraCalibration calib = read_calibration(calib_path);
  return build_rectification(calib, read_mask(mask_path, calib.image_size()), cfg.pair,
                             cfg.out_size, cfg.crop_step);
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

void emit_error(const std::string& name, const std::string& message, int code) {
  Json j;
  j["error"] = name;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vanishing-point rectification, 3D boxes and speed measurement for traffic video"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vpbox 0.1.0");

  std::string calib_path, mask_path, view_path, det_path, gt_path, out_path, tracks_path;
  std::optional<double> fps;
  double match_window = 0.5;
  ViewOptions vo;

  // build-transform
  auto* bt = app.add_subcommand("build-transform", "Build the perspective transformation for a scene");
  bt->add_option("--calib", calib_path, "Calibration JSON")->required();
  bt->add_option("--mask", mask_path, "Road mask (PGM or polygon JSON)")->required();
  bt->add_option("-o,--out", out_path, "Write the view JSON here instead of stdout");
  vo.add(bt);

  // gen-labels
  std::string instances_path;
  auto* gl = app.add_subcommand("gen-labels", "Turn instance masks into 2D box + cc labels");
  gl->add_option("--instances", instances_path, "Instance masks, JSON-lines")->required();
  gl->add_option("--view", view_path, "View JSON");
  gl->add_option("--calib", calib_path, "Calibration JSON (needed for polygons and to build a view)");
  gl->add_option("--mask", mask_path, "Road mask, when building the view");
  gl->add_option("-o,--out", out_path, "Label file")->required();
  vo.add(gl);

  // losses
  std::string labels_path, preds_path;
  double iou_thr = 0.5, l_conf = 0.0, l_loc = 0.0;
  auto* lo = app.add_subcommand("losses", "cc regression loss of predictions against labels");
  lo->add_option("--labels", labels_path, "Ground-truth label file")->required();
  lo->add_option("--predictions", preds_path, "Predictions in label format")->required();
  lo->add_option("--iou", iou_thr, "IoU needed to assign an anchor")->capture_default_str();
  lo->add_option("--l-conf", l_conf, "Raw classification loss to fold into the total");
  lo->add_option("--l-loc", l_loc, "Raw box regression loss to fold into the total");

  // track
  auto* tr = app.add_subcommand("track", "IoU-track a detection stream");
  tr->add_option("--detections", det_path, "Detections, JSON-lines")->required();
  tr->add_option("--view", view_path, "View JSON");
  tr->add_option("--calib", calib_path, "Calibration JSON, when building the view");
  tr->add_option("--mask", mask_path, "Road mask, when building the view");
  tr->add_option("-o,--out", out_path, "Track file")->required();
  vo.add(tr);

  // speed
  auto* sp = app.add_subcommand("speed", "Measure track speeds");
  sp->add_option("--tracks", tracks_path, "Track file")->required();
  sp->add_option("--calib", calib_path, "Calibration JSON")->required();
  sp->add_option("--view", view_path, "View JSON");
  sp->add_option("--mask", mask_path, "Road mask, when building the view");
  sp->add_option("--fps", fps, "Frame rate")->required();
  sp->add_option("--gt", gt_path, "Ground truth (for crossing times, lanes and metrics)");
  sp->add_option("--match-window", match_window, "GT matching window, seconds")->capture_default_str();
  sp->add_option("-o,--out", out_path, "Report JSON")->required();
  vo.add(sp);

  // evaluate
  std::vector<std::string> reports_in, gts_in;
  bool csv = false, plots = false;
  auto* ev = app.add_subcommand("evaluate", "Match speed reports against ground truth");
  ev->add_option("--report", reports_in, "Speed report JSON, one per video")->required();
  ev->add_option("--gt", gts_in, "Ground truth JSON, same order as --report")->required();
  ev->add_option("--match-window", match_window, "Matching window, seconds")->capture_default_str();
  ev->add_option("-o,--out", out_path, "Output stem for metrics JSON/CSV/plots");
  ev->add_flag("--csv", csv, "Also write CSV");
  ev->add_flag("--plots", plots, "Also write SVG plots");

  // simulate
  std::uint64_t seed = 1;
  SceneOptions so;
  double sigma = 0.0, dropout = 0.0, sim_fps = 50.0;
  std::string out_dir, space = "rectified";
  bool write_instances = false;
  auto* si = app.add_subcommand("simulate", "Write a synthetic calibrated scene");
  si->add_option("--seed", seed, "Random seed")->capture_default_str();
  si->add_option("--vehicles", so.vehicles, "Vehicle count")->capture_default_str();
  si->add_option("--lanes", so.lanes, "Lane count")->capture_default_str();
  si->add_option("--min-speed", so.min_speed_kmh, "km/h")->capture_default_str();
  si->add_option("--max-speed", so.max_speed_kmh, "km/h")->capture_default_str();
  si->add_option("--sigma", sigma, "Gaussian noise on box coordinates, px")->capture_default_str();
  si->add_option("--dropout", dropout, "Detection dropout probability")->capture_default_str();
  si->add_option("--fps", sim_fps, "Frame rate")->capture_default_str();
  si->add_option("--space", space, "Detection coordinates: rectified or original")->capture_default_str();
  si->add_flag("--instances", write_instances, "Also write vehicle silhouettes as instance masks");
  si->add_option("-o,--out-dir", out_dir, "Output directory")->required();
  vo.add(si);

  // run
  std::string manifest_path;
  int jobs = 0;
  auto* ru = app.add_subcommand("run", "Full pipeline: rectify, track, measure, report");
  ru->add_option("--calib", calib_path, "Calibration JSON");
  ru->add_option("--mask", mask_path, "Road mask");
  ru->add_option("--detections", det_path, "Detections, JSON-lines");
  ru->add_option("--gt", gt_path, "Ground truth JSON");
  ru->add_option("--manifest", manifest_path, "Batch manifest; replaces the per-video options");
  ru->add_option("--jobs", jobs, "Worker threads for --manifest (0 = all cores)")->capture_default_str();
  ru->add_option("--fps", fps, "Frame rate; overrides the detection file");
  ru->add_option("--match-window", match_window, "GT matching window, seconds")->capture_default_str();
  ru->add_option("-o,--out", out_path, "Report stem (writes <stem>.json)")->required();
  ru->add_flag("--csv", csv, "Also write CSV");
  ru->add_flag("--plots", plots, "Also write SVG plots");
  std::map<int, double> lane_scale;
  ru->add_option("--lane-scale", lane_scale, "Per-lane scale override, LANE SCALE pairs");
  vo.add(ru);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (bt->parsed()) {
      PipelineConfig cfg;
      vo.apply(cfg);
      const CameraCalibration calib = read_calibration(calib_path);
      const RectifiedView v = build_rectification(calib, read_mask(mask_path, calib.image_size()),
                                                  cfg.pair, cfg.out_size, cfg.crop_step);
      Json j = to_json(v);
      j["calibration"] = to_json(calib);
      if (out_path.empty()) {
        print(j);
      } else {
        write_text(out_path, j.dump(2) + "\n");
      }
    } else if (gl->parsed()) {
      const RectifiedView v = load_view(view_path, calib_path, mask_path, vo);
      ImageSize image{0, 0};
      if (!calib_path.empty()) image = read_calibration(calib_path).image_size();
      const auto masks = read_instances(instances_path, image);
      const LabelBatch batch = generate_labels(masks, v);
      write_text(out_path, labels_to_text(batch.records));
      Json j;
      j["records"] = batch.records.size();
      j["clamped"] = batch.clamped;
      j["skipped"] = batch.skipped;
      print(j);
    } else if (lo->parsed()) {
      const auto labels = read_labels(labels_path);
      const auto preds = read_labels(preds_path);
      std::map<int, std::pair<std::vector<const CcBox*>, std::vector<const CcBox*>>> frames;
      for (const auto& l : labels) frames[l.frame].second.push_back(&l.label);
      for (const auto& p : preds) frames[p.frame].first.push_back(&p.label);
      double l_c = 0.0;
      int assigned = 0;
      for (const auto& [frame, fp] : frames) {
        std::vector<Box2D> anchors, truths;
        std::vector<double> pred, gt;
        for (const auto* p : fp.first) anchors.push_back(p->box), pred.push_back(p->cc);
        for (const auto* t : fp.second) truths.push_back(t->box), gt.push_back(t->cc);
        const Assignment a = assign_by_iou(anchors, truths, iou_thr);
        for (auto x : a.x) assigned += x;
        l_c += cc_loss(a, pred, gt);
      }
      const LossBreakdown lb = total_loss(l_conf, l_loc, l_c, static_cast<int>(preds.size()));
      Json j;
      j["n_anchors"] = preds.size();
      j["assigned"] = assigned;
      j["l_conf"] = lb.l_conf;
      j["l_loc"] = lb.l_loc;
      j["l_c"] = lb.l_c;
      j["l_tot"] = lb.l_tot;
      print(j);
    } else if (tr->parsed()) {
      const RectifiedView v = load_view(view_path, calib_path, mask_path, vo);
      const DetectionStream s = read_detections(det_path, &v);
      Tracker tracker;
      std::vector<CcBox> boxes;
      for (const auto& f : s.frames) {
        boxes.clear();
        for (const auto& d : f.detections) boxes.push_back(d.ccbox);
        tracker.step(f.frame, boxes);
      }
      FinalizeStats st;
      const auto tracks = tracker.finalize(v.out_size, &st);
      write_text(out_path, tracks_to_text(tracks));
      print({{"tracks", tracks.size()},
             {"edge_boxes_removed", st.edge_boxes_removed},
             {"dropped_short", st.dropped_short},
             {"dropped_static", st.dropped_static}});
    } else if (sp->parsed()) {
      const CameraCalibration calib = read_calibration(calib_path);
      const RectifiedView v = load_view(view_path, calib_path, mask_path, vo);
      const auto tracks = read_tracks(tracks_path);
      // Re-running the tracker over already tracked boxes would regroup them;
      // feed each track through the speed stage directly instead.
      DetectionStream s;
      s.fps = *fps;
      std::map<int, FrameDetections> by_frame;
      PipelineConfig cfg;
      vo.apply(cfg);
      cfg.fps = fps;
      cfg.match_window_s = match_window;
      std::optional<GroundTruth> gt;
      if (!gt_path.empty()) gt = read_ground_truth(gt_path);
      std::optional<RoadLine> line;
      if (gt) line = road_line(gt->measurement_line[0], gt->measurement_line[1], calib);
      Report r;
      r.video = fs::path(tracks_path).stem().string();
      r.fps = *fps;
      r.pair = v.pair;
      r.coverage = v.coverage;
      r.crop_rows = v.crop_rows;
      std::vector<Measurement> measured;
      for (const auto& t : tracks) {
        try {
          const TrackSpeed ts = measure_track(t, calib, v, *fps);
          TrackReport rep{t.id, ts.speed_kmh, std::nullopt, std::nullopt,
                          static_cast<int>(t.detections.size()), ts.valid_pairs};
          if (line) {
            if (const auto frame = crossing_frame(ts.positions, *line, calib)) {
              rep.crossing_time_s = *frame / *fps;
              rep.lane = lane_of(position_at(ts.positions, *frame), gt->lanes);
            }
          }
          r.tracks.push_back(rep);
          measured.push_back({rep.id, rep.speed_kmh, rep.crossing_time_s, rep.lane});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kInsufficientDetections) throw;
          ++r.counts.dropped_unmeasurable;
        }
      }
      if (gt) r.evaluation = evaluate(measured, gt->vehicles, match_window);
      write_text(out_path, to_json(r).dump(2) + "\n");
    } else if (ev->parsed()) {
      if (reports_in.size() != gts_in.size()) {
        throw Error(ErrorCode::kInvalidArgument, "need one --gt per --report");
      }
      std::vector<Report> reports;
      for (size_t i = 0; i < reports_in.size(); ++i) {
        const Json j = parse_json(read_text(reports_in[i]), reports_in[i]);
        const GroundTruth gt = read_ground_truth(gts_in[i]);
        std::vector<Measurement> measured;
        Report r;
        try {
          r.video = j.value("video", fs::path(reports_in[i]).stem().string());
          r.fps = j.value("fps", 0.0);
          for (const auto& t : j.at("tracks")) {
            Measurement m;
            m.id = t.at("id").get<int>();
            m.speed_kmh = t.at("speed_kmh").get<double>();
            if (t.contains("crossing_time_s") && !t["crossing_time_s"].is_null()) {
              m.time_s = t["crossing_time_s"].get<double>();
            }
            if (t.contains("lane") && !t["lane"].is_null()) m.lane = t["lane"].get<int>();
            measured.push_back(m);
            r.tracks.push_back({m.id, m.speed_kmh, m.time_s, m.lane, 0, 0});
          }
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::kFormatError, reports_in[i] + ": " + e.what());
        }
        r.evaluation = evaluate(measured, gt.vehicles, match_window);
        reports.push_back(std::move(r));
      }
      Json out;
      Json per = Json::array();
      for (const auto& r : reports) per.push_back({{"video", r.video}, {"metrics", to_json(r.evaluation->metrics)}});
      out["videos"] = per;
      out["aggregate"] = to_json(*aggregate_reports(reports));
      print(out);
      if (!out_path.empty()) emit_report(reports, out_path, csv, plots);
    } else if (si->parsed()) {
      PipelineConfig cfg;
      vo.apply(cfg);
      GeneratedScene g = generate_scene(so, seed);
      g.scene.pair = cfg.pair;
      g.scene.out_size = cfg.out_size;
      g.scene.fps = sim_fps;
      g.scene.noise = {sigma, dropout};
      if (space != "rectified" && space != "original") {
        throw Error(ErrorCode::kInvalidArgument, "--space must be rectified or original");
      }
      Simulation sim = simulate(g.scene, seed, g.duration_s);
      const fs::path dir(out_dir);
      write_text(dir / "calib.json", to_json(*sim.calib).dump(2) + "\n");
      write_mask_pgm(dir / "mask.pgm", sim.mask);
      write_text(dir / "view.json", to_json(sim.view).dump(2) + "\n");
      if (space == "original") sim.stream.space = CoordinateSpace::kOriginal;
      write_text(dir / "detections.jsonl", detections_to_text(sim.stream));
      write_text(dir / "gt.json", to_json(sim.gt).dump(2) + "\n");
      if (write_instances) {
        std::string lines;
        for (const auto& ft : sim.truth) {
          for (const auto& b : ft.boxes) {
            Json poly = Json::array();
            for (const auto& p : convex_hull(b.image.vertices)) poly.push_back(point_json(p));
            Json j;
            j["frame"] = ft.frame;
            j["id"] = b.vehicle;
            j["polygon"] = poly;
            lines += j.dump() + "\n";
          }
        }
        write_text(dir / "instances.jsonl", lines);
      }
      Json manifest;
      manifest["videos"] = Json::array({{{"name", "synthetic"},
                                         {"calib", "calib.json"},
                                         {"mask", "mask.pgm"},
                                         {"detections", "detections.jsonl"},
                                         {"gt", "gt.json"}}});
      write_text(dir / "manifest.json", manifest.dump(2) + "\n");
      print({{"frames", sim.stream.frames.size()},
             {"detections", sim.stream.detection_count()},
             {"vehicles", sim.gt.vehicles.size()},
             {"coverage", sim.view.coverage},
             {"crop_rows", sim.view.crop_rows},
             {"duration_s", g.duration_s}});
    } else if (ru->parsed()) {
      PipelineConfig cfg;
      vo.apply(cfg);
      cfg.fps = fps;
      cfg.match_window_s = match_window;
      cfg.lane_scale = lane_scale;
      std::vector<VideoJob> batch;
      if (!manifest_path.empty()) {
        batch = read_manifest(manifest_path);
      } else {
        if (calib_path.empty() || mask_path.empty() || det_path.empty()) {
          throw Error(ErrorCode::kInvalidArgument, "need --calib, --mask and --detections, or --manifest");
        }
        VideoJob job{fs::path(det_path).stem().string(), calib_path, mask_path, det_path, std::nullopt};
        if (!gt_path.empty()) job.gt = gt_path;
        batch.push_back(job);
      }
      const auto results = run_batch(batch, cfg, jobs);
      std::vector<Report> reports;
      int worst = 0;
      for (size_t i = 0; i < results.size(); ++i) {
        if (results[i].report) {
          reports.push_back(*results[i].report);
        } else {
          emit_error(results[i].error_name, batch[i].name + ": " + results[i].error_message,
                     results[i].exit_code);
          worst = std::max(worst, results[i].exit_code);
        }
      }
      if (worst != 0 && batch.size() == 1) return worst;
      emit_report(reports, out_path, csv, plots);
      Json summary;
      summary["videos"] = reports.size();
      summary["failed"] = results.size() - reports.size();
      std::size_t tracks = 0;
      for (const auto& r : reports) tracks += r.tracks.size();
      summary["tracks"] = tracks;
      if (const auto agg = aggregate_reports(reports)) summary["metrics"] = to_json(*agg);
      print(summary);
      return worst;
    }
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    emit_error(std::string(error_name(e.code())), e.detail(), code);
    return code;
  } catch (const std::exception& e) {
    emit_error("InternalError", e.what(), 2);
    return 2;
  }
  return 0;
}
