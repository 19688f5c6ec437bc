#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpbox/calib.hpp"
#include "vpbox/labelgen.hpp"
#include "vpbox/rectify.hpp"
#include "vpbox/stream.hpp"
#include "vpbox/track.hpp"

namespace vpbox {

using Json = nlohmann::ordered_json;

// File helpers. Missing or unwritable files throw IOError, malformed content
// FormatError.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
Json parse_json(const std::string& text, const std::string& what);
std::vector<Json> parse_json_lines(const std::string& text, const std::string& what);

// {"vp1": [x,y], "vp2": [x,y], "pp": [x,y]?, "scale": s, "image_size": [w,h]}.
// "focal" and "vp3" are written for inspection and ignored on read.
CameraCalibration calibration_from_json(const Json& j);
Json to_json(const CameraCalibration& c);
CameraCalibration read_calibration(const std::filesystem::path& path);

// Binary PGM (P5) or ASCII PGM (P2), nonzero = foreground; or JSON
// {"polygon": [[x,y],...]} rasterized at `image_size`.
RoadMask read_mask(const std::filesystem::path& path, ImageSize image_size);
void write_mask_pgm(const std::filesystem::path& path, const RoadMask& mask);

Json to_json(const RectifiedView& v);
RectifiedView view_from_json(const Json& j);
RectifiedView read_view(const std::filesystem::path& path);

// JSON-lines. An optional first line without "frame" is a header
// {"fps": f, "space": "rectified"|"original"}. Every other line is
// {"frame": n, "detections": [{"box": [x0,y0,x1,y1] | "corners": [[x,y]x4],
// "cc": c, "score": s}]}. Original-space detections need `view` to be warped;
// pass nullptr for rectified files.
DetectionStream detections_from_text(const std::string& text, const RectifiedView* view);
DetectionStream read_detections(const std::filesystem::path& path, const RectifiedView* view);
std::string detections_to_text(const DetectionStream& s);

// {"frame", "id", "pixels": [[x,y],...]} or {"frame", "id", "polygon": [[x,y],...]}
// (rasterized at `image_size`).
std::vector<InstanceMask> read_instances(const std::filesystem::path& path, ImageSize image_size);
std::string labels_to_text(std::span<const LabelRecord> labels);
std::vector<LabelRecord> read_labels(const std::filesystem::path& path);

std::string tracks_to_text(std::span<const Track> tracks);
std::vector<Track> read_tracks(const std::filesystem::path& path);

Json to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const Json& j);
GroundTruth read_ground_truth(const std::filesystem::path& path);

Json point_json(ImagePoint p);
Json box_json(const Box2D& b);

}  // namespace vpbox
