// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/camera_stream/camera_stream.hpp"

#include <algorithm>
#include <cmath>

#include "radbev/errors.hpp"
#include "radbev/numerics/mlp.hpp"
#include "radbev/numerics/ops.hpp"

namespace radbev {

ImageEncoderParams ImageEncoderParams::make(std::size_t channels, std::size_t trunk, std::size_t depth_bins,
                                            Rng& rng) {
  ImageEncoderParams p;
  p.conv1 = Parameter("image.conv1", uniform_init({trunk, 3, 3, 3}, 27, rng));
  p.conv1_b = Parameter("image.conv1_b", Tensor({trunk}), false);
  p.conv2 = Parameter("image.conv2", uniform_init({trunk, trunk, 3, 3}, trunk * 9, rng));
  p.conv2_b = Parameter("image.conv2_b", Tensor({trunk}), false);
  p.ctx_w = Parameter("image.ctx_w", uniform_init({trunk, channels}, trunk, rng));
  p.ctx_b = Parameter("image.ctx_b", Tensor({channels}), false);
  p.depth_w = Parameter("image.depth_w", uniform_init({trunk, depth_bins}, trunk, rng));
  p.depth_b = Parameter("image.depth_b", Tensor({depth_bins}), false);
  p.occ_w = Parameter("image.occ_w", uniform_init({trunk, 1}, trunk, rng));
  p.occ_b = Parameter("image.occ_b", Tensor({1}), false);
  return p;
}

void ImageEncoderParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&conv1, &conv1_b, &conv2, &conv2_b, &ctx_w, &ctx_b, &depth_w, &depth_b, &occ_w, &occ_b}) {
    out.push_back(p);
  }
}

namespace {

Tensor stack(const std::vector<Var>& parts) {
  if (parts.empty()) return Tensor();
  Shape shape = parts.front().shape();
  shape.insert(shape.begin(), parts.size());
  Tensor out(shape);
  const std::size_t n = parts.front().value().size();
  for (std::size_t k = 0; k < parts.size(); ++k) std::copy_n(parts[k].value().data(), n, out.data() + k * n);
  return out;
}

// Per-pixel linear head: w^T [out, T] x features [T, HW] + b.
Var pixel_head(Tape& tape, Var features, Parameter& w, Parameter& b) {
  return ops::add_col_bias(ops::matmul(ops::transpose(tape.param(w)), features), tape.param(b));
}

}  // namespace

Tensor ImageStreamOutput::stacked_context() const { return stack(context); }
Tensor ImageStreamOutput::stacked_depth() const { return stack(depth); }
Tensor ImageStreamOutput::stacked_occupancy() const { return stack(occupancy); }

ImageStreamOutput encode_images(Tape& tape, const Tensor& images, ImageEncoderParams& params) {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw DimensionError("encode_images: expected [N, 3, H, W], got " + shape_str(images.shape()));
  }
  for (double v : images.values()) {
    if (!std::isfinite(v)) throw NumericError("encode_images: non-finite pixel value");
  }
  const std::size_t n = images.dim(0), h = images.dim(2), w = images.dim(3), hw = h * w;
  const std::size_t trunk = params.conv1.value.dim(0);
  const std::size_t c = params.channels(), d = params.depth_bins();
  ImageStreamOutput out;
  for (std::size_t cam = 0; cam < n; ++cam) {
    Tensor img({3, h, w}, std::span<const double>(images.data() + cam * 3 * hw, 3 * hw));
    Var x = ops::conv2d_lite(tape.constant(std::move(img)), tape.param(params.conv1));
    x = ops::relu(ops::add_col_bias(ops::reshape(x, {trunk, hw}), tape.param(params.conv1_b)));
    x = ops::conv2d_lite(ops::reshape(x, {trunk, h, w}), tape.param(params.conv2));
    x = ops::relu(ops::add_col_bias(ops::reshape(x, {trunk, hw}), tape.param(params.conv2_b)));
    out.context.push_back(ops::reshape(pixel_head(tape, x, params.ctx_w, params.ctx_b), {c, h, w}));
    out.depth.push_back(
        ops::reshape(ops::softmax(pixel_head(tape, x, params.depth_w, params.depth_b), 0), {d, h, w}));
    out.occupancy.push_back(ops::reshape(ops::sigmoid(pixel_head(tape, x, params.occ_w, params.occ_b)), {1, h, w}));
  }
  return out;
}

std::vector<double> object_embedding(int class_id, int object, std::size_t channels) {
  std::vector<double> e(channels, 0.0);
  if (class_id >= 0 && static_cast<std::size_t>(class_id) < channels) e[static_cast<std::size_t>(class_id)] = 1.0;
  if (object < 0) return e;
  for (std::size_t k = kNumClasses; k < channels; ++k) {
    e[k] = 0.5 * std::sin(1.7 * static_cast<double>(object + 1) * static_cast<double>(k - kNumClasses + 1));
  }
  return e;
}

ImageStreamOutput ideal_image_outputs(Tape& tape, const GroundTruth& gt, const std::vector<SceneObject>& objects,
                                      const DepthBins& bins, std::size_t channels) {
  ImageStreamOutput out;
  const std::size_t d = bins.count;
  const std::vector<double> free_space = object_embedding(0, -1, channels);
  for (std::size_t cam = 0; cam < gt.depth_image.size(); ++cam) {
    const Tensor& depth = gt.depth_image[cam];
    const Tensor& ids = gt.object_id[cam];
    const std::size_t h = depth.dim(0), w = depth.dim(1), hw = h * w;
    Tensor ctx({channels, h, w}), dist({d, h, w}), occ({1, h, w});
    for (std::size_t i = 0; i < hw; ++i) {
      const int id = static_cast<int>(ids[i]);
      if (id < 0 || depth[i] <= 0.0) {
        dist[(d - 1) * hw + i] = 1.0;
        for (std::size_t k = 0; k < channels; ++k) ctx[k * hw + i] = free_space[k];
        continue;
      }
      const double c = std::clamp(bins.continuous_index(depth[i]), 0.0, static_cast<double>(d - 1));
      const auto k0 = std::min(static_cast<std::size_t>(std::floor(c)), d - 2);
      const double frac = c - static_cast<double>(k0);
      dist[k0 * hw + i] = 1.0 - frac;
      dist[(k0 + 1) * hw + i] = frac;
      occ[i] = 1.0;
      const std::vector<double> e = object_embedding(objects.at(static_cast<std::size_t>(id)).class_id, id, channels);
      for (std::size_t k = 0; k < channels; ++k) ctx[k * hw + i] = e[k];
    }
    out.context.push_back(tape.constant(std::move(ctx)));
    out.depth.push_back(tape.constant(std::move(dist)));
    out.occupancy.push_back(tape.constant(std::move(occ)));
  }
  return out;
}

}  // namespace radbev
