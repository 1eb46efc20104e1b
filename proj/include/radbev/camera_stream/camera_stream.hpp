// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "radbev/numerics/rng.hpp"
#include "radbev/numerics/tape.hpp"
#include "radbev/scene_sim/scene.hpp"

namespace radbev {

/// Lite image encoder: two 3x3 conv + ReLU trunk layers shared by three
/// per-pixel linear heads.
struct ImageEncoderParams {
  Parameter conv1, conv1_b;  // [T, 3, 3, 3], [T]
  Parameter conv2, conv2_b;  // [T, T, 3, 3], [T]
  Parameter ctx_w, ctx_b;    // [T, C], [C]
  Parameter depth_w, depth_b;  // [T, D], [D]
  Parameter occ_w, occ_b;      // [T, 1], [1]

  static ImageEncoderParams make(std::size_t channels, std::size_t trunk, std::size_t depth_bins, Rng& rng);
  std::size_t channels() const { return ctx_w.value.dim(1); }
  std::size_t depth_bins() const { return depth_w.value.dim(1); }
  void collect(std::vector<Parameter*>& out);
};

/// Per-camera image features: context [C,H,W], depth distribution [D,H,W]
/// (softmax over D), occupancy [1,H,W] (sigmoid).
struct ImageStreamOutput {
  std::vector<Var> context;
  std::vector<Var> depth;
  std::vector<Var> occupancy;

  std::size_t cameras() const { return context.size(); }
  Tensor stacked_context() const;    // [N, C, H, W]
  Tensor stacked_depth() const;      // [N, D, H, W]
  Tensor stacked_occupancy() const;  // [N, 1, H, W]
};

// images: [N, 3, H, W]. Throws NumericError on non-finite input.
ImageStreamOutput encode_images(Tape& tape, const Tensor& images, ImageEncoderParams& params);

// Fixed, non-learned context embedding of an object pixel.
std::vector<double> object_embedding(int class_id, int object, std::size_t channels);

// Oracle stream rendered from ground truth. Object pixels carry a depth
// distribution split linearly between the two bins bracketing the true
// depth, occupancy 1 and the object's embedding; other pixels are one-hot
// at the far bin with zero occupancy and the free-space embedding.
ImageStreamOutput ideal_image_outputs(Tape& tape, const GroundTruth& gt, const std::vector<SceneObject>& objects,
                                      const DepthBins& bins, std::size_t channels);

}  // namespace radbev
