#include "vpbox/losses.hpp"

#include <cmath>

#include "vpbox/error.hpp"
#include "vpbox/track.hpp"

namespace vpbox {

Assignment::Assignment(int anchors, int truths) : n(anchors), m(truths) {
  if (anchors < 0 || truths < 0) throw Error(ErrorCode::kInvalidArgument, "negative dimension");
  x.assign(static_cast<size_t>(anchors) * truths, 0);
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_grad(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

namespace {

void check_dims(const Assignment& a, std::span<const double> pred, std::span<const double> gt) {
  if (a.x.size() != static_cast<size_t>(a.n) * a.m || pred.size() != static_cast<size_t>(a.n) ||
      gt.size() != static_cast<size_t>(a.m)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "assignment is " + std::to_string(a.n) + "x" + std::to_string(a.m) + ", got " +
                    std::to_string(pred.size()) + " predictions and " + std::to_string(gt.size()) +
                    " targets");
  }
}

}  // namespace

double cc_loss(const Assignment& a, std::span<const double> pred, std::span<const double> gt) {
  check_dims(a, pred, gt);
  double sum = 0.0;
  for (int i = 0; i < a.n; ++i) {
    for (int j = 0; j < a.m; ++j) {
      if (a(i, j)) sum += smooth_l1(pred[i] - gt[j]);
    }
  }
  return sum;
}

std::vector<double> cc_loss_grad(const Assignment& a, std::span<const double> pred,
                                 std::span<const double> gt) {
  check_dims(a, pred, gt);
  std::vector<double> g(a.n, 0.0);
  for (int i = 0; i < a.n; ++i) {
    for (int j = 0; j < a.m; ++j) {
      if (a(i, j)) g[i] += smooth_l1_grad(pred[i] - gt[j]);
    }
  }
  return g;
}

LossBreakdown total_loss(double l_conf, double l_loc, double l_c, int n_anchors) {
  if (n_anchors <= 0) throw Error(ErrorCode::kZeroAnchors, "total loss needs at least one anchor");
  return {l_conf, l_loc, l_c, (l_conf + l_loc + l_c) / n_anchors};
}

Assignment assign_by_iou(std::span<const Box2D> anchors, std::span<const Box2D> truths,
                         double threshold) {
  Assignment a(static_cast<int>(anchors.size()), static_cast<int>(truths.size()));
  for (int i = 0; i < a.n; ++i) {
    int best = -1;
    double best_iou = threshold;
    for (int j = 0; j < a.m; ++j) {
      const double v = iou(anchors[i], truths[j]);
      if (v >= best_iou && (best < 0 || v > best_iou)) best = j, best_iou = v;
    }
    if (best >= 0) a(i, best) = 1;
  }
  return a;
}

}  // namespace vpbox
