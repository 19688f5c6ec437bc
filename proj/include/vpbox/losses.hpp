#pragma once

#include <span>
#include <vector>

#include "vpbox/boxgeom.hpp"

namespace vpbox {

// N x M binary matrix, row-major: x(i, j) = 1 when anchor i is matched to
// ground-truth box j.
struct Assignment {
  int n = 0;
  int m = 0;
  std::vector<unsigned char> x;

  Assignment(int anchors, int truths);
  unsigned char& operator()(int i, int j) { return x[static_cast<size_t>(i) * m + j]; }
  unsigned char operator()(int i, int j) const { return x[static_cast<size_t>(i) * m + j]; }
};

struct LossBreakdown {
  double l_conf = 0.0;
  double l_loc = 0.0;
  double l_c = 0.0;
  double l_tot = 0.0;
};

double smooth_l1(double x);
double smooth_l1_grad(double x);

// Raw (unnormalized) sum of x_ij * smooth_l1(pred_i - gt_j). Throws
// DimensionMismatch.
double cc_loss(const Assignment& a, std::span<const double> pred, std::span<const double> gt);

// d cc_loss / d pred_i.
std::vector<double> cc_loss_grad(const Assignment& a, std::span<const double> pred,
                                 std::span<const double> gt);

// Components are raw sums; 1/N is applied here, once. Throws ZeroAnchors.
LossBreakdown total_loss(double l_conf, double l_loc, double l_c, int n_anchors);

// Matches each anchor to the ground-truth box of highest IoU when that IoU is
// at least `threshold`. Test helper; real detectors bring their own rule.
Assignment assign_by_iou(std::span<const Box2D> anchors, std::span<const Box2D> truths,
                         double threshold = 0.5);

}  // namespace vpbox
