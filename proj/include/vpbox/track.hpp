#pragma once

#include <span>
#include <vector>

#include "vpbox/boxgeom.hpp"

namespace vpbox {

double iou(const Box2D& a, const Box2D& b);

struct Detection {
  int frame = 0;
  CcBox ccbox;
};

struct TrackerConfig {
  double iou_threshold = 0.1;
  int max_gap_frames = 10;
  double edge_margin_px = 10.0;
  int min_detections = 5;
  double min_travel_px = 100.0;

  void validate() const;
};

struct Track {
  int id = 0;
  std::vector<Detection> detections;

  int last_frame() const { return detections.back().frame; }
  // Distance between the first and last box centers.
  double travel() const;
};

struct FinalizeStats {
  int edge_boxes_removed = 0;
  int dropped_short = 0;   // fewer than min_detections
  int dropped_static = 0;  // travel below min_travel_px
};

// IoU tracker over one stream of rectified detections. Frames must be fed in
// strictly increasing order.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {});

  // Throws NonMonotonicFrame.
  void step(int frame, std::span<const CcBox> detections);

  // Retires every track, removes boxes within the edge margin of the
  // rectified image, then drops short and static tracks. Result is ordered by
  // id. The tracker is empty afterwards.
  std::vector<Track> finalize(ImageSize image_size, FinalizeStats* stats = nullptr);

  const std::vector<Track>& active() const { return active_; }
  const std::vector<Track>& retired() const { return retired_; }

 private:
  TrackerConfig cfg_;
  std::vector<Track> active_;
  std::vector<Track> retired_;
  int next_id_ = 0;
  int last_frame_ = -1;
  bool started_ = false;
};

}  // namespace vpbox
