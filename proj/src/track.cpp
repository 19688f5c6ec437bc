#include "vpbox/track.hpp"

#include <algorithm>
#include <iterator>
#include <tuple>

#include "vpbox/error.hpp"

namespace vpbox {

double iou(const Box2D& a, const Box2D& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

void TrackerConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IoU threshold must be in (0, 1]");
  }
  // Zero margin or travel switches that filter off.
  if (max_gap_frames <= 0 || min_detections <= 0 || !(edge_margin_px >= 0.0) ||
      !(min_travel_px >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tracker thresholds must be positive");
  }
}

double Track::travel() const {
  return distance(detections.front().ccbox.box.center(), detections.back().ccbox.box.center());
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Tracker::step(int frame, std::span<const CcBox> detections) {
  if (frame < 0 || (started_ && frame <= last_frame_)) {
    throw Error(ErrorCode::kNonMonotonicFrame, "frame " + std::to_string(frame) +
                                                   " does not follow frame " +
                                                   std::to_string(last_frame_));
  }
  started_ = true;
  last_frame_ = frame;

  // A track with nothing added in the last max_gap_frames frames is done.
  auto idle = [&](const Track& t) { return frame - t.last_frame() > cfg_.max_gap_frames; };
  const auto split = std::stable_partition(active_.begin(), active_.end(),
                                           [&](const Track& t) { return !idle(t); });
  std::move(split, active_.end(), std::back_inserter(retired_));
  active_.erase(split, active_.end());

  struct Candidate {
    double iou;
    int track;
    int det;
  };
  std::vector<Candidate> cands;
  for (int ti = 0; ti < static_cast<int>(active_.size()); ++ti) {
    const Box2D& last = active_[ti].detections.back().ccbox.box;
    for (int di = 0; di < static_cast<int>(detections.size()); ++di) {
      const double v = iou(last, detections[di].box);
      if (v > cfg_.iou_threshold) cands.push_back({v, ti, di});
    }
  }
  // active_ is kept in id order, so the track index breaks ties by id.
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.track, a.det) < std::tie(a.iou, b.track, b.det);
  });

  std::vector<bool> track_used(active_.size(), false), det_used(detections.size(), false);
  for (const auto& c : cands) {
    if (track_used[c.track] || det_used[c.det]) continue;
    track_used[c.track] = det_used[c.det] = true;
    active_[c.track].detections.push_back({frame, detections[c.det]});
  }
  for (size_t di = 0; di < detections.size(); ++di) {
    if (!det_used[di]) active_.push_back({next_id_++, {{frame, detections[di]}}});
  }
}

std::vector<Track> Tracker::finalize(ImageSize image_size, FinalizeStats* stats) {
  FinalizeStats s;
  std::vector<Track> all = std::move(retired_);
  for (auto& t : active_) all.push_back(std::move(t));
  active_.clear();
  retired_.clear();
  std::sort(all.begin(), all.end(), [](const Track& a, const Track& b) { return a.id < b.id; });

  const double m = cfg_.edge_margin_px;
  auto near_edge = [&](const Detection& d) {
    const Box2D& b = d.ccbox.box;
    return b.x_min < m || b.y_min < m || b.x_max > image_size.width - m ||
           b.y_max > image_size.height - m;
  };

  std::vector<Track> kept;
  for (auto& t : all) {
    s.edge_boxes_removed += static_cast<int>(std::erase_if(t.detections, near_edge));
    if (static_cast<int>(t.detections.size()) < cfg_.min_detections) {
      ++s.dropped_short;
    } else if (t.travel() < cfg_.min_travel_px) {
      ++s.dropped_static;
    } else {
      kept.push_back(std::move(t));
    }
  }
  started_ = false;
  last_frame_ = -1;
  if (stats) *stats = s;
  return kept;
}

}  // namespace vpbox
