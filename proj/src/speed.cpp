#include "vpbox/speed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "vpbox/error.hpp"

namespace vpbox {

std::vector<Position> track_positions(const Track& track, const CameraCalibration& calib,
                                      const RectifiedView& view, int* skipped) {
  std::vector<Position> out;
  out.reserve(track.detections.size());
  int bad = 0;
  for (const auto& d : track.detections) {
    const auto box = try_reconstruct(d.ccbox, view.vpu);
    if (!box) {
      ++bad;
      continue;
    }
    try {
      const ImagePoint ref = reference_point(to_image(*box, view));
      out.push_back({d.frame, ref, project_to_road(ref, calib)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kHorizonPoint && e.code() != ErrorCode::kPointAtInfinity) throw;
      ++bad;
    }
  }
  if (skipped) *skipped = bad;
  return out;
}

std::vector<double> interframe_speeds(std::span<const Position> positions,
                                      const CameraCalibration& calib, double fps) {
  if (!(fps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fps must be positive");
  if (positions.size() < 2) {
    throw Error(ErrorCode::kInsufficientDetections,
                std::to_string(positions.size()) + " usable detections, need 2");
  }
  std::vector<double> v;
  v.reserve(positions.size() - 1);
  for (size_t i = 1; i < positions.size(); ++i) {
    const int dt = positions[i].frame - positions[i - 1].frame;
    v.push_back(3.6 * road_distance(positions[i].road, positions[i - 1].road, calib) * fps / dt);
  }
  return v;
}

std::vector<double> interframe_speeds(const Track& track, const CameraCalibration& calib,
                                      const RectifiedView& view, double fps) {
  return interframe_speeds(track_positions(track, calib, view), calib, fps);
}

double track_speed(std::span<const double> speeds) {
  if (speeds.empty()) throw Error(ErrorCode::kEmptyList, "no interframe speeds");
  std::vector<double> v(speeds.begin(), speeds.end());
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

TrackSpeed measure_track(const Track& track, const CameraCalibration& calib,
                         const RectifiedView& view, double fps) {
  TrackSpeed ts;
  ts.track_id = track.id;
  ts.positions = track_positions(track, calib, view, &ts.skipped);
  const auto v = interframe_speeds(ts.positions, calib, fps);
  ts.valid_pairs = static_cast<int>(v.size());
  ts.speed_kmh = track_speed(v);
  return ts;
}

RoadLine road_line(ImagePoint p, ImagePoint q, const CameraCalibration& calib) {
  return {project_to_road(p, calib), project_to_road(q, calib)};
}

double signed_distance(const RoadLine& line, const RoadPoint& x, const CameraCalibration& calib) {
  const Eigen::Vector3d dir = line.b.xyz - line.a.xyz;
  const double len = dir.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::kInvalidArgument, "measurement line has zero length");
  return calib.road_normal().dot(dir.cross(x.xyz - line.a.xyz)) / len;
}

std::optional<double> crossing_frame(std::span<const Position> positions, const RoadLine& line,
                                     const CameraCalibration& calib) {
  if (positions.size() < 2) return std::nullopt;
  std::vector<double> s;
  s.reserve(positions.size());
  for (const auto& p : positions) s.push_back(signed_distance(line, p.road, calib));

  for (size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == 0.0) return positions[i].frame;
    if ((s[i] < 0.0) != (s[i + 1] < 0.0) || s[i + 1] == 0.0) {
      const double f0 = positions[i].frame, f1 = positions[i + 1].frame;
      return f0 + (f1 - f0) * s[i] / (s[i] - s[i + 1]);
    }
  }

  const double n = static_cast<double>(s.size());
  double mf = 0.0, ms = 0.0;
  for (size_t i = 0; i < s.size(); ++i) mf += positions[i].frame, ms += s[i];
  mf /= n, ms /= n;
  double sff = 0.0, sfs = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const double df = positions[i].frame - mf;
    sff += df * df, sfs += df * (s[i] - ms);
  }
  if (sff <= 0.0) return std::nullopt;
  const double slope = sfs / sff;
  if (std::abs(slope) < 1e-12) return std::nullopt;
  return mf - ms / slope;
}

ImagePoint position_at(std::span<const Position> positions, double frame) {
  if (positions.empty()) throw Error(ErrorCode::kEmptyList, "no positions");
  if (frame <= positions.front().frame) return positions.front().image;
  if (frame >= positions.back().frame) return positions.back().image;
  const auto it = std::upper_bound(positions.begin(), positions.end(), frame,
                                   [](double f, const Position& p) { return f < p.frame; });
  const Position& hi = *it;
  const Position& lo = *(it - 1);
  const double t = (frame - lo.frame) / (hi.frame - lo.frame);
  return lo.image + t * (hi.image - lo.image);
}

std::optional<int> lane_of(ImagePoint p, std::span<const Lane> lanes) {
  for (const auto& lane : lanes) {
    const auto& poly = lane.polygon;
    bool inside = false;
    for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      if ((poly[i].y > p.y) != (poly[j].y > p.y) &&
          p.x < (poly[j].x - poly[i].x) * (p.y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x) {
        inside = !inside;
      }
    }
    if (inside) return lane.id;
  }
  return std::nullopt;
}

double percentile_nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptyList, "no values");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "percentile outside (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<size_t>(std::ceil(q * values.size()));
  return values[std::clamp<size_t>(rank, 1, values.size()) - 1];
}

Evaluation evaluate(std::span<const Measurement> measured, std::span<const GroundTruthRecord> gt,
                    double window_s) {
  struct Candidate {
    double dt;
    size_t m;
    size_t g;
  };
  std::vector<Candidate> cands;
  for (size_t i = 0; i < measured.size(); ++i) {
    const auto& m = measured[i];
    if (!m.time_s || !m.lane) continue;
    for (size_t j = 0; j < gt.size(); ++j) {
      const double dt = std::abs(*m.time_s - gt[j].time_s);
      if (*m.lane == gt[j].lane && dt <= window_s) cands.push_back({dt, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dt, a.m, a.g) < std::tie(b.dt, b.m, b.g);
  });

  Evaluation ev;
  std::vector<bool> m_used(measured.size(), false), g_used(gt.size(), false);
  std::vector<double> errors;
  for (const auto& c : cands) {
    if (m_used[c.m] || g_used[c.g]) continue;
    m_used[c.m] = g_used[c.g] = true;
    ev.pairs.push_back({measured[c.m].id, gt[c.g].id, measured[c.m].speed_kmh, gt[c.g].speed_kmh});
    errors.push_back(std::abs(measured[c.m].speed_kmh - gt[c.g].speed_kmh));
  }

  VideoMetrics& vm = ev.metrics;
  vm.matched = static_cast<int>(errors.size());
  vm.n_gt = static_cast<int>(gt.size());
  vm.n_measured = static_cast<int>(measured.size());
  vm.recall = gt.empty() ? 0.0 : double(vm.matched) / vm.n_gt;
  vm.precision = measured.empty() ? 0.0 : double(vm.matched) / vm.n_measured;
  if (!errors.empty()) {
    vm.mean_abs_err = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
    vm.median_abs_err = track_speed(errors);
    vm.p95_abs_err = percentile_nearest_rank(errors, 0.95);
  }
  return ev;
}

VideoMetrics aggregate(std::span<const VideoMetrics> per_video) {
  if (per_video.empty()) throw Error(ErrorCode::kEmptyList, "no videos to aggregate");
  VideoMetrics a;
  for (const auto& v : per_video) {
    a.mean_abs_err += v.mean_abs_err;
    a.median_abs_err += v.median_abs_err;
    a.p95_abs_err += v.p95_abs_err;
    a.recall += v.recall;
    a.precision += v.precision;
    a.matched += v.matched;
    a.n_gt += v.n_gt;
    a.n_measured += v.n_measured;
  }
  const double n = static_cast<double>(per_video.size());
  a.mean_abs_err /= n;
  a.median_abs_err /= n;
  a.p95_abs_err /= n;
  a.recall /= n;
  a.precision /= n;
  return a;
}

}  // namespace vpbox
