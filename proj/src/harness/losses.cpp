// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/harness/losses.hpp"

#include <algorithm>
#include <cmath>

#include "radbev/errors.hpp"
#include "radbev/numerics/mlp.hpp"
#include "radbev/numerics/ops.hpp"

namespace radbev {

namespace {

double clamp_prob(double p) { return std::clamp(p, kLogClamp, 1.0 - kLogClamp); }

bool clamped(double p) { return p < kLogClamp || p > 1.0 - kLogClamp; }

}  // namespace

Var depth_loss(Tape& tape, const std::vector<Var>& depth, const std::vector<Tensor>& depth_image,
               const DepthBins& bins) {
  if (depth.size() != depth_image.size()) throw DimensionError("depth_loss: camera count mismatch");
  // Target bin per pixel and camera; -1 excludes the pixel.
  std::vector<std::vector<std::int64_t>> targets(depth.size());
  double valid = 0.0;
  for (std::size_t n = 0; n < depth.size(); ++n) {
    const Shape& s = depth[n].shape();
    const Tensor& di = depth_image[n];
    if (s.size() != 3 || s[0] != bins.count || di.rank() != 2 || di.dim(0) != s[1] || di.dim(1) != s[2]) {
      throw DimensionError("depth_loss: expected I_D [D,H,W] matching depth image [H,W]");
    }
    targets[n].assign(di.size(), -1);
    for (std::size_t i = 0; i < di.size(); ++i) {
      if (di[i] <= 0.0) continue;
      if (const auto b = bins.bin_of(di[i])) {
        targets[n][i] = static_cast<std::int64_t>(*b);
        valid += 1.0;
      }
    }
  }
  if (valid == 0.0) return tape.constant(Tensor::scalar(0.0));

  double loss = 0.0;
  for (std::size_t n = 0; n < depth.size(); ++n) {
    const Tensor& p = depth[n].value();
    const std::size_t d = p.dim(0), hw = p.dim(1) * p.dim(2);
    for (std::size_t i = 0; i < hw; ++i) {
      if (targets[n][i] < 0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        const double pk = clamp_prob(p[k * hw + i]);
        loss -= static_cast<std::int64_t>(k) == targets[n][i] ? std::log(pk) : std::log(1.0 - pk);
      }
    }
  }
  loss /= valid;
  return tape.record(Tensor::scalar(loss), depth, [depth, targets, valid](Tape& t, const Tensor& g) {
    const double s = g[0] / valid;
    for (std::size_t n = 0; n < depth.size(); ++n) {
      if (!t.requires_grad(depth[n])) continue;
      const Tensor& p = depth[n].value();
      Tensor& gp = t.grad(depth[n]);
      const std::size_t d = p.dim(0), hw = p.dim(1) * p.dim(2);
      for (std::size_t i = 0; i < hw; ++i) {
        if (targets[n][i] < 0) continue;
        for (std::size_t k = 0; k < d; ++k) {
          const double pk = p[k * hw + i];
          if (clamped(pk)) continue;
          gp[k * hw + i] += static_cast<std::int64_t>(k) == targets[n][i] ? -s / pk : s / (1.0 - pk);
        }
      }
    }
  });
}

Var occupancy_loss(Tape& tape, const std::vector<Var>& occupancy, const std::vector<Tensor>& heatmap) {
  if (occupancy.size() != heatmap.size()) throw DimensionError("occupancy_loss: camera count mismatch");
  double positives = 0.0, loss = 0.0;
  for (std::size_t n = 0; n < occupancy.size(); ++n) {
    const Tensor& p = occupancy[n].value();
    const Tensor& y = heatmap[n];
    if (p.size() != y.size()) throw DimensionError("occupancy_loss: I_O and heatmap sizes differ");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (y[i] < 0.0 || y[i] > 1.0) throw DataError("occupancy_loss: heatmap outside [0, 1]");
      const double pi = clamp_prob(p[i]);
      if (y[i] == 1.0) {
        positives += 1.0;
        loss -= std::pow(1.0 - pi, kFocalAlpha) * std::log(pi);
      } else {
        loss -= std::pow(1.0 - y[i], kFocalBeta) * std::pow(pi, kFocalAlpha) * std::log(1.0 - pi);
      }
    }
  }
  const double norm = std::max(positives, 1.0);
  return tape.record(Tensor::scalar(loss / norm), occupancy, [occupancy, heatmap, norm](Tape& t, const Tensor& g) {
    const double s = g[0] / norm;
    for (std::size_t n = 0; n < occupancy.size(); ++n) {
      if (!t.requires_grad(occupancy[n])) continue;
      const Tensor& p = occupancy[n].value();
      const Tensor& y = heatmap[n];
      Tensor& gp = t.grad(occupancy[n]);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i];
        if (clamped(pi)) continue;
        double d;
        if (y[i] == 1.0) {
          d = kFocalAlpha * std::pow(1.0 - pi, kFocalAlpha - 1.0) * std::log(pi) -
              std::pow(1.0 - pi, kFocalAlpha) / pi;
        } else {
          d = -std::pow(1.0 - y[i], kFocalBeta) * (kFocalAlpha * std::pow(pi, kFocalAlpha - 1.0) * std::log(1.0 - pi) -
                                                   std::pow(pi, kFocalAlpha) / (1.0 - pi));
        }
        gp[i] += s * d;
      }
    }
  });
}

SegHeadParams SegHeadParams::make(std::size_t channels, std::size_t hidden, std::size_t classes, Rng& rng) {
  if (classes < 2) throw ConfigError("segmentation head needs at least 2 classes");
  SegHeadParams p;
  p.conv1 = Parameter("seg.conv1", uniform_init({hidden, channels, 3, 3}, channels * 9, rng));
  p.conv1_b = Parameter("seg.conv1_b", Tensor({hidden}), false);
  p.conv2 = Parameter("seg.conv2", uniform_init({classes, hidden, 3, 3}, hidden * 9, rng));
  p.conv2_b = Parameter("seg.conv2_b", Tensor({classes}), false);
  return p;
}

void SegHeadParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&conv1, &conv1_b, &conv2, &conv2_b}) out.push_back(p);
}

Var seg_head_forward(Tape& tape, Var map, SegHeadParams& params) {
  const Shape s = map.shape();
  if (s.size() != 3) throw DimensionError("seg_head_forward: expected [C, X, Y]");
  const std::size_t hidden = params.conv1.value.dim(0), k = params.classes(), q = s[1] * s[2];
  Var h = ops::conv2d_lite(map, tape.param(params.conv1));
  h = ops::relu(ops::add_col_bias(ops::reshape(h, {hidden, q}), tape.param(params.conv1_b)));
  Var y = ops::conv2d_lite(ops::reshape(h, {hidden, s[1], s[2]}), tape.param(params.conv2));
  y = ops::add_col_bias(ops::reshape(y, {k, q}), tape.param(params.conv2_b));
  return ops::reshape(y, {k, s[1], s[2]});
}

Var segmentation_loss(Var logits, const std::vector<int>& labels) {
  const Shape s = logits.shape();
  if (s.size() != 3) throw DimensionError("segmentation_loss: expected [K, X, Y]");
  return ops::cross_entropy_cols(ops::reshape(logits, {s[0], s[1] * s[2]}), labels);
}

void IouCounts::add(const IouCounts& other) {
  if (intersection.empty()) {
    *this = other;
    return;
  }
  if (other.intersection.size() != intersection.size()) throw DimensionError("IouCounts: class count mismatch");
  for (std::size_t c = 0; c < intersection.size(); ++c) {
    intersection[c] += other.intersection[c];
    union_[c] += other.union_[c];
  }
}

std::vector<double> IouCounts::iou() const {
  std::vector<double> out(intersection.size(), -1.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (union_[c] > 0.0) out[c] = intersection[c] / union_[c];
  }
  return out;
}

double IouCounts::mean_iou(std::size_t first) const {
  double sum = 0.0, n = 0.0;
  for (std::size_t c = first; c < intersection.size(); ++c) {
    if (union_[c] > 0.0) {
      sum += intersection[c] / union_[c];
      n += 1.0;
    }
  }
  return n > 0.0 ? sum / n : 0.0;
}

IouCounts iou_counts(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() < 2) throw DimensionError("iou_counts: expected [K, ...] logits");
  const std::size_t k = logits.dim(0), q = logits.size() / k;
  if (labels.size() != q) throw DimensionError("iou_counts: label count mismatch");
  IouCounts out;
  out.intersection.assign(k, 0.0);
  out.union_.assign(k, 0.0);
  for (std::size_t j = 0; j < q; ++j) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (logits[c * q + j] > logits[best * q + j]) best = c;
    }
    const auto truth = static_cast<std::size_t>(labels[j]);
    if (truth >= k) throw DataError("iou_counts: label outside [0, K)");
    if (best == truth) {
      out.intersection[best] += 1.0;
      out.union_[best] += 1.0;
    } else {
      out.union_[best] += 1.0;
      out.union_[truth] += 1.0;
    }
  }
  return out;
}

}  // namespace radbev
