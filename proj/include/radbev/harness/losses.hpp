// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "radbev/geometry/geometry.hpp"
#include "radbev/numerics/rng.hpp"
#include "radbev/numerics/tape.hpp"

namespace radbev {

// Probabilities are clamped to [kLogClamp, 1 - kLogClamp] inside logs.
inline constexpr double kLogClamp = 1e-12;
inline constexpr double kFocalAlpha = 2.0;
inline constexpr double kFocalBeta = 4.0;

// Binary cross-entropy of each camera's I_D [D,H,W] against the one-hot bin
// of depth_image [H,W], summed over bins and averaged over pixels whose
// depth falls inside the bins. Returns a zero constant when no pixel is valid.
Var depth_loss(Tape& tape, const std::vector<Var>& depth, const std::vector<Tensor>& depth_image,
               const DepthBins& bins);

// Gaussian focal loss of each camera's I_O [1,H,W] against heatmap [H,W],
// summed over cameras and normalized by the number of positives (at least 1).
Var occupancy_loss(Tape& tape, const std::vector<Var>& occupancy, const std::vector<Tensor>& heatmap);

/// BEV segmentation head: two 3x3 conv layers with a ReLU in between.
struct SegHeadParams {
  Parameter conv1, conv1_b;  // [Hd, C, 3, 3], [Hd]
  Parameter conv2, conv2_b;  // [K, Hd, 3, 3], [K]

  static SegHeadParams make(std::size_t channels, std::size_t hidden, std::size_t classes, Rng& rng);
  std::size_t classes() const { return conv2.value.dim(0); }
  void collect(std::vector<Parameter*>& out);
};

// map [C, X, Y] -> logits [K, X, Y].
Var seg_head_forward(Tape& tape, Var map, SegHeadParams& params);

// Mean per-cell softmax cross-entropy of logits [K, X, Y] against labels
// (q = i*Y + j). Throws DataError on a label outside [0, K).
Var segmentation_loss(Var logits, const std::vector<int>& labels);

struct IouCounts {
  std::vector<double> intersection, union_;  // per class
  void add(const IouCounts& other);
  // Per-class IoU; classes with an empty union report a negative value.
  std::vector<double> iou() const;
  // Mean IoU over classes [first, K) with a non-empty union; 0 when none.
  double mean_iou(std::size_t first = 1) const;
};

// Argmax of logits [K, Q] (or [K, X, Y]) compared with labels.
IouCounts iou_counts(const Tensor& logits, const std::vector<int>& labels);

/// Unit-weighted sum of the three loss terms.
struct LossBreakdown {
  double total = 0.0, depth = 0.0, occupancy = 0.0, task = 0.0;
};

}  // namespace radbev
