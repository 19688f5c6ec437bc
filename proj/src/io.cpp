#include "vpbox/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "vpbox/error.hpp"

namespace vpbox {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIOError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIOError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIOError, "write failed for " + path.string());
}

namespace {

// Runs f, turning JSON access errors into FormatError tagged with `what`.
template <class F>
auto guarded(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, what + ": " + e.what());
  }
}

ImagePoint point_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kFormatError, "point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<ImagePoint> points_from(const Json& j) {
  std::vector<ImagePoint> out;
  for (const auto& p : j) out.push_back(point_from(p));
  return out;
}

Box2D box_from(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::kFormatError, "box must be [x_min, y_min, x_max, y_max]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

ImageSize size_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kFormatError, "size must be [w, h]");
  return {j[0].get<int>(), j[1].get<int>()};
}

Json size_json(ImageSize s) { return Json::array({s.width, s.height}); }

std::string dump_lines(const std::vector<Json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

}  // namespace

Json point_json(ImagePoint p) { return Json::array({p.x, p.y}); }
Json box_json(const Box2D& b) { return Json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, what + ": " + e.what());
  }
}

std::vector<Json> parse_json_lines(const std::string& text, const std::string& what) {
  std::vector<Json> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    out.push_back(parse_json(line, what + " line " + std::to_string(n)));
  }
  return out;
}

CameraCalibration calibration_from_json(const Json& j) {
  return guarded("calibration", [&] {
    std::optional<ImagePoint> pp;
    if (j.contains("pp") && !j["pp"].is_null()) pp = point_from(j["pp"]);
    return CameraCalibration::from_vps(point_from(j.at("vp1")), point_from(j.at("vp2")),
                                       j.at("scale").get<double>(), size_from(j.at("image_size")),
                                       pp);
  });
}

Json to_json(const CameraCalibration& c) {
  Json j;
  j["vp1"] = point_json(c.vp1());
  j["vp2"] = point_json(c.vp2());
  j["pp"] = point_json(c.pp());
  j["scale"] = c.scale();
  j["image_size"] = size_json(c.image_size());
  j["focal"] = c.focal();
  j["vp3"] = point_json(c.vp3());
  return j;
}

CameraCalibration read_calibration(const fs::path& path) {
  return calibration_from_json(parse_json(read_text(path), path.string()));
}

namespace {

RoadMask read_pgm(const std::string& data, const std::string& name) {
  std::istringstream in(data);
  auto token = [&]() {
    std::string t;
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    if (!(in >> t)) throw Error(ErrorCode::kFormatError, name + ": truncated PGM header");
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw Error(ErrorCode::kFormatError, name + ": not a PGM file");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kFormatError, name + ": bad PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorCode::kFormatError, name + ": bad PGM header");
  }
  const size_t n = static_cast<size_t>(w) * h;
  std::vector<std::uint8_t> bits(n);
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    const size_t bpp = maxval > 255 ? 2 : 1;
    std::string raw(n * bpp, '\0');
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
      throw Error(ErrorCode::kFormatError, name + ": truncated PGM data");
    }
    for (size_t i = 0; i < n; ++i) {
      bits[i] = bpp == 1 ? raw[i] != 0 : (raw[2 * i] != 0 || raw[2 * i + 1] != 0);
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      int v = 0;
      if (!(in >> v)) throw Error(ErrorCode::kFormatError, name + ": truncated PGM data");
      bits[i] = v != 0;
    }
  }
  return RoadMask::from_raster({w, h}, std::move(bits));
}

}  // namespace

RoadMask read_mask(const fs::path& path, ImageSize image_size) {
  const std::string data = read_text(path);
  RoadMask m;
  if (data.starts_with("P5") || data.starts_with("P2")) {
    m = read_pgm(data, path.string());
  } else {
    const Json j = parse_json(data, path.string());
    m = guarded(path.string(), [&] {
      const ImageSize size = j.contains("image_size") ? size_from(j["image_size"]) : image_size;
      return RoadMask::from_polygon(points_from(j.at("polygon")), size);
    });
  }
  if (m.size().width != image_size.width || m.size().height != image_size.height) {
    throw Error(ErrorCode::kFormatError, path.string() + ": mask size differs from the image size");
  }
  return m;
}

void write_mask_pgm(const fs::path& path, const RoadMask& mask) {
  const ImageSize s = mask.size();
  std::string out = "P5\n" + std::to_string(s.width) + " " + std::to_string(s.height) + "\n255\n";
  out.reserve(out.size() + mask.bits().size());
  for (auto b : mask.bits()) out.push_back(b ? char(255) : char(0));
  write_text(path, out);
}

Json to_json(const RectifiedView& v) {
  Json j;
  j["pair"] = std::string(to_string(v.pair));
  j["out_size"] = size_json(v.out_size);
  Json h = Json::array();
  for (int r = 0; r < 3; ++r) {
    h.push_back(Json::array({v.h.matrix()(r, 0), v.h.matrix()(r, 1), v.h.matrix()(r, 2)}));
  }
  j["H"] = h;
  j["vpu"] = point_json(v.vpu);
  j["coverage"] = v.coverage;
  j["crop_rows"] = v.crop_rows;
  return j;
}

RectifiedView view_from_json(const Json& j) {
  return guarded("view", [&] {
    Eigen::Matrix3d m;
    const Json& h = j.at("H");
    if (!h.is_array() || h.size() != 3) throw Error(ErrorCode::kFormatError, "H must be 3x3");
    for (int r = 0; r < 3; ++r) {
      if (!h[r].is_array() || h[r].size() != 3) throw Error(ErrorCode::kFormatError, "H must be 3x3");
      for (int c = 0; c < 3; ++c) m(r, c) = h[r][c].get<double>();
    }
    RectifiedView v;
    v.h = Homography(m);
    v.out_size = size_from(j.at("out_size"));
    v.pair = parse_vp_pair(j.at("pair").get<std::string>());
    v.vpu = point_from(j.at("vpu"));
    v.coverage = j.value("coverage", 0.0);
    v.crop_rows = j.value("crop_rows", 0);
    return v;
  });
}

RectifiedView read_view(const fs::path& path) {
  return view_from_json(parse_json(read_text(path), path.string()));
}

DetectionStream detections_from_text(const std::string& text, const RectifiedView* view) {
  const auto lines = parse_json_lines(text, "detections");
  DetectionStream s;
  size_t first = 0;
  if (!lines.empty() && !lines[0].contains("frame")) {
    guarded("detections header", [&] {
      s.fps = lines[0].value("fps", 0.0);
      const std::string space = lines[0].value("space", "rectified");
      if (space == "original") {
        s.space = CoordinateSpace::kOriginal;
      } else if (space != "rectified") {
        throw Error(ErrorCode::kFormatError, "unknown coordinate space '" + space + "'");
      }
    });
    first = 1;
  }
  if (s.space == CoordinateSpace::kOriginal && !view) {
    throw Error(ErrorCode::kInvalidArgument, "original-space detections need a view");
  }
  for (size_t i = first; i < lines.size(); ++i) {
    guarded("detections line " + std::to_string(i + 1), [&] {
      FrameDetections f;
      f.frame = lines[i].at("frame").get<int>();
      for (const auto& d : lines[i].value("detections", Json::array())) {
        StreamDetection sd;
        sd.ccbox.cc = d.at("cc").get<double>();
        sd.ccbox.score = d.value("score", 1.0);
        if (s.space == CoordinateSpace::kRectified) {
          sd.ccbox.box = box_from(d.at("box"));
          if (view) sd.corners = unwarp_corners(sd.ccbox.box, view->h);
        } else {
          if (d.contains("corners")) {
            const auto c = points_from(d["corners"]);
            if (c.size() != 4) throw Error(ErrorCode::kFormatError, "corners must hold 4 points");
            std::copy(c.begin(), c.end(), sd.corners.begin());
          } else {
            const Box2D b = box_from(d.at("box"));
            sd.corners = {ImagePoint{b.x_min, b.y_min}, {b.x_max, b.y_min}, {b.x_max, b.y_max},
                          {b.x_min, b.y_max}};
          }
          sd.ccbox.box = warp_corners(sd.corners, view->h);
        }
        f.detections.push_back(sd);
      }
      s.frames.push_back(std::move(f));
    });
  }
  return s;
}

DetectionStream read_detections(const fs::path& path, const RectifiedView* view) {
  return detections_from_text(read_text(path), view);
}

std::string detections_to_text(const DetectionStream& s) {
  std::vector<Json> lines;
  Json header;
  header["fps"] = s.fps;
  header["space"] = s.space == CoordinateSpace::kRectified ? "rectified" : "original";
  lines.push_back(header);
  for (const auto& f : s.frames) {
    Json dets = Json::array();
    for (const auto& d : f.detections) {
      Json jd;
      if (s.space == CoordinateSpace::kRectified) {
        jd["box"] = box_json(d.ccbox.box);
      } else {
        Json c = Json::array();
        for (const auto& p : d.corners) c.push_back(point_json(p));
        jd["corners"] = c;
      }
      jd["cc"] = d.ccbox.cc;
      jd["score"] = d.ccbox.score;
      dets.push_back(jd);
    }
    Json line;
    line["frame"] = f.frame;
    line["detections"] = dets;
    lines.push_back(line);
  }
  return dump_lines(lines);
}

std::vector<InstanceMask> read_instances(const fs::path& path, ImageSize image_size) {
  std::vector<InstanceMask> out;
  for (const auto& j : parse_json_lines(read_text(path), path.string())) {
    guarded(path.string(), [&] {
      InstanceMask m;
      m.frame = j.at("frame").get<int>();
      m.id = j.at("id").get<int>();
      if (j.contains("pixels")) {
        for (const auto& p : j["pixels"]) m.pixels.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
      } else {
        const RoadMask r = RoadMask::from_polygon(points_from(j.at("polygon")), image_size);
        for (int y = std::max(0, r.top_row()); y <= r.bottom_row(); ++y) {
          for (int x = 0; x < image_size.width; ++x) {
            if (r.contains(x, y)) m.pixels.push_back({x, y});
          }
        }
      }
      out.push_back(std::move(m));
    });
  }
  return out;
}

std::string labels_to_text(std::span<const LabelRecord> labels) {
  std::vector<Json> lines;
  for (const auto& l : labels) {
    Json j;
    j["frame"] = l.frame;
    j["box"] = box_json(l.label.box);
    j["cc"] = l.label.cc;
    j["id"] = l.id;
    lines.push_back(j);
  }
  return dump_lines(lines);
}

std::vector<LabelRecord> read_labels(const fs::path& path) {
  std::vector<LabelRecord> out;
  for (const auto& j : parse_json_lines(read_text(path), path.string())) {
    guarded(path.string(), [&] {
      LabelRecord r;
      r.frame = j.at("frame").get<int>();
      r.id = j.value("id", 0);
      r.label.box = box_from(j.at("box"));
      r.label.cc = j.at("cc").get<double>();
      r.label.score = j.value("score", 1.0);
      out.push_back(r);
    });
  }
  return out;
}

std::string tracks_to_text(std::span<const Track> tracks) {
  std::vector<Json> lines;
  for (const auto& t : tracks) {
    Json dets = Json::array();
    for (const auto& d : t.detections) {
      Json jd;
      jd["frame"] = d.frame;
      jd["box"] = box_json(d.ccbox.box);
      jd["cc"] = d.ccbox.cc;
      jd["score"] = d.ccbox.score;
      dets.push_back(jd);
    }
    Json j;
    j["id"] = t.id;
    j["detections"] = dets;
    lines.push_back(j);
  }
  return dump_lines(lines);
}

std::vector<Track> read_tracks(const fs::path& path) {
  std::vector<Track> out;
  for (const auto& j : parse_json_lines(read_text(path), path.string())) {
    guarded(path.string(), [&] {
      Track t;
      t.id = j.at("id").get<int>();
      for (const auto& d : j.at("detections")) {
        t.detections.push_back({d.at("frame").get<int>(),
                                {box_from(d.at("box")), d.at("cc").get<double>(), d.value("score", 1.0)}});
      }
      if (t.detections.empty()) throw Error(ErrorCode::kFormatError, "track without detections");
      out.push_back(std::move(t));
    });
  }
  return out;
}

Json to_json(const GroundTruth& gt) {
  Json j;
  j["measurement_line"] = Json::array({point_json(gt.measurement_line[0]), point_json(gt.measurement_line[1])});
  Json lanes = Json::array();
  for (const auto& l : gt.lanes) {
    Json poly = Json::array();
    for (const auto& p : l.polygon) poly.push_back(point_json(p));
    Json jl;
    jl["id"] = l.id;
    jl["polygon"] = poly;
    lanes.push_back(jl);
  }
  j["lanes"] = lanes;
  Json vehicles = Json::array();
  for (const auto& v : gt.vehicles) {
    Json jv;
    jv["id"] = v.id;
    jv["lane"] = v.lane;
    jv["time_s"] = v.time_s;
    jv["speed_kmh"] = v.speed_kmh;
    vehicles.push_back(jv);
  }
  j["vehicles"] = vehicles;
  return j;
}

GroundTruth ground_truth_from_json(const Json& j) {
  return guarded("ground truth", [&] {
    GroundTruth gt;
    const auto line = points_from(j.at("measurement_line"));
    if (line.size() != 2) throw Error(ErrorCode::kFormatError, "measurement_line needs 2 points");
    gt.measurement_line = {line[0], line[1]};
    for (const auto& l : j.value("lanes", Json::array())) {
      gt.lanes.push_back({l.at("id").get<int>(), points_from(l.at("polygon"))});
    }
    for (const auto& v : j.value("vehicles", Json::array())) {
      GroundTruthRecord r{v.at("id").get<int>(), v.at("lane").get<int>(), v.at("time_s").get<double>(),
                          v.at("speed_kmh").get<double>()};
      if (!(r.speed_kmh > 0.0)) throw Error(ErrorCode::kFormatError, "ground-truth speed must be positive");
      gt.vehicles.push_back(r);
    }
    return gt;
  });
}

GroundTruth read_ground_truth(const fs::path& path) {
  return ground_truth_from_json(parse_json(read_text(path), path.string()));
}

}  // namespace vpbox
