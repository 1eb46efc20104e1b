// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/radar_stream/radar_stream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "radbev/errors.hpp"
#include "radbev/numerics/ops.hpp"
#include "radbev/numerics/parallel.hpp"

namespace radbev {

RadarPointCloud accumulate_sweeps(const std::vector<RadarPointCloud>& sweeps, const std::vector<EgoPose>& poses) {
  if (sweeps.size() > static_cast<std::size_t>(kMaxSweepIndex) + 1) {
    throw ConfigError("accumulate_sweeps: at most 7 sweeps are supported, got " + std::to_string(sweeps.size()));
  }
  if (poses.size() < sweeps.size()) {
    throw ConfigError("accumulate_sweeps: missing ego pose for sweep " + std::to_string(poses.size()));
  }
  RadarPointCloud out;
  for (std::size_t k = 0; k < sweeps.size(); ++k) {
    const EgoPose& pose = poses[k];
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    for (const RadarPoint& p : sweeps[k].points) {
      RadarPoint q = p;
      q.x = c * p.x - s * p.y + pose.x;
      q.y = s * p.x + c * p.y + pose.y;
      q.vx = c * p.vx - s * p.vy;
      q.vy = s * p.vx + c * p.vy;
      out.points.push_back(q);
    }
  }
  out.validate();
  return out;
}

std::vector<std::size_t> FrustumPillars::points_in(std::size_t column, std::size_t bin) const {
  const auto id = static_cast<std::int64_t>(bin * columns + column);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pillar.size(); ++i) {
    if (pillar[i] == id) out.push_back(source[i]);
  }
  return out;
}

FrustumPillars voxelize_frustum(const RadarPointCloud& cloud, const CameraRig& rig, std::size_t cam,
                                const DepthBins& bins, std::size_t stride) {
  if (cam >= rig.size()) throw GeometryError("voxelize_frustum: camera index out of range");
  if (stride == 0) throw ConfigError("voxelize_frustum: stride must be positive");
  const Camera& camera = rig.cameras[cam];
  FrustumPillars out;
  out.depth_bins = bins.count;
  out.columns = (camera.width + stride - 1) / stride;

  struct Placement {
    std::int64_t column = -1, bin = -1;
    std::array<double, kPointFeatures> features{};
  };
  std::vector<Placement> placed(cloud.size());
  const double s = static_cast<double>(stride);
  parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const RadarPoint& p = cloud.points[i];
      const ImageProjection ip = project_point(camera, {p.x, p.y, p.z});
      const FrustumProjection fp = project_point_to_frustum(camera, {p.x, p.y, p.z}, bins);
      if (!fp.visible) continue;
      const auto bin = bins.bin_of(ip.depth);
      if (!bin) continue;
      const auto column = std::min(static_cast<std::size_t>(std::floor(fp.u / s)), out.columns - 1);
      Placement& pl = placed[i];
      pl.column = static_cast<std::int64_t>(column);
      pl.bin = static_cast<std::int64_t>(*bin);
      pl.features = {fp.u / s - static_cast<double>(column) - 0.5,
                     (ip.depth - bins.d_min) / bins.width() - static_cast<double>(*bin) - 0.5,
                     p.z / 2.0,
                     p.rcs / 10.0,
                     p.vx / 10.0,
                     p.vy / 10.0,
                     static_cast<double>(p.sweep) / static_cast<double>(kMaxSweepIndex)};
    }
  });

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    if (placed[i].column >= 0) order.push_back(i);
  }
  out.dropped = cloud.size() - order.size();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (placed[a].column != placed[b].column) return placed[a].column < placed[b].column;
    return placed[a].bin < placed[b].bin;
  });
  for (std::size_t i : order) {
    out.features.push_back(placed[i].features);
    out.pillar.push_back(placed[i].bin * static_cast<std::int64_t>(out.columns) + placed[i].column);
    out.source.push_back(i);
  }
  return out;
}

RadarEncoderParams RadarEncoderParams::make(std::size_t channels, std::size_t width, Rng& rng) {
  RadarEncoderParams p;
  p.point_mlp = MlpParams::make("radar.point_mlp", {kPointFeatures, width, width},
                                {Activation::relu, Activation::relu}, rng);
  p.conv1 = Parameter("radar.conv1", uniform_init({width, width, 3, 3}, width * 9, rng));
  p.conv1_b = Parameter("radar.conv1_b", Tensor({width}), false);
  p.conv2 = Parameter("radar.conv2", uniform_init({width, width, 3, 3}, width * 9, rng));
  p.conv2_b = Parameter("radar.conv2_b", Tensor({width}), false);
  p.ctx_w = Parameter("radar.ctx_w", uniform_init({width, channels}, width, rng));
  p.ctx_b = Parameter("radar.ctx_b", Tensor({channels}), false);
  p.occ_w = Parameter("radar.occ_w", uniform_init({width, 1}, width, rng));
  p.occ_b = Parameter("radar.occ_b", Tensor({1}), false);
  return p;
}

void RadarEncoderParams::collect(std::vector<Parameter*>& out) {
  point_mlp.collect(out);
  for (Parameter* p : {&conv1, &conv1_b, &conv2, &conv2_b, &ctx_w, &ctx_b, &occ_w, &occ_b}) out.push_back(p);
}

namespace {

Tensor stack(const std::vector<Var>& parts) {
  if (parts.empty()) return Tensor();
  Shape shape = parts.front().shape();
  shape.insert(shape.begin(), parts.size());
  Tensor out(shape);
  const std::size_t n = parts.front().value().size();
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::copy_n(parts[k].value().data(), n, out.data() + k * n);
  }
  return out;
}

// 3x3 conv with per-channel bias and ReLU over a [F, D, W] map.
Var conv_block(Tape& tape, Var map, Parameter& kernel, Parameter& bias) {
  const Shape shape = map.shape();
  Var y = ops::conv2d_lite(map, tape.param(kernel));
  y = ops::add_col_bias(ops::reshape(y, {shape[0], shape[1] * shape[2]}), tape.param(bias));
  return ops::reshape(ops::relu(y), shape);
}

}  // namespace

Tensor RadarStreamOutput::stacked_occupancy() const { return stack(occupancy); }
Tensor RadarStreamOutput::stacked_context() const { return stack(context); }

RadarStreamOutput encode_pillars(Tape& tape, const std::vector<FrustumPillars>& pillars, RadarEncoderParams& params,
                                 bool occ_softmax) {
  RadarStreamOutput out;
  const std::size_t f = params.width();
  const std::size_t c = params.channels();
  for (const FrustumPillars& pl : pillars) {
    const std::size_t d = pl.depth_bins, wc = pl.columns, cells = pl.cells();
    Var plane;
    if (pl.placed() == 0) {
      plane = tape.constant(Tensor({f, d, wc}));
    } else {
      Tensor feats({pl.placed(), kPointFeatures});
      for (std::size_t i = 0; i < pl.placed(); ++i) {
        std::copy(pl.features[i].begin(), pl.features[i].end(), feats.data() + i * kPointFeatures);
      }
      Var per_point = params.point_mlp.forward(tape, tape.constant(std::move(feats)));
      Var pooled = ops::segment_max(per_point, pl.pillar, cells);  // [cells, F]
      plane = ops::reshape(ops::transpose(pooled), {f, d, wc});
    }
    Var h = conv_block(tape, plane, params.conv1, params.conv1_b);
    h = conv_block(tape, h, params.conv2, params.conv2_b);
    Var flat = ops::reshape(h, {f, cells});
    Var ctx = ops::add_col_bias(ops::matmul(ops::transpose(tape.param(params.ctx_w)), flat), tape.param(params.ctx_b));
    out.context.push_back(ops::reshape(ctx, {c, d, wc}));
    Var logits =
        ops::add_col_bias(ops::matmul(ops::transpose(tape.param(params.occ_w)), flat), tape.param(params.occ_b));
    Var occ = occ_softmax ? ops::softmax(ops::reshape(logits, {d, wc}), 0) : ops::sigmoid(logits);
    out.occupancy.push_back(ops::reshape(occ, {d, 1, wc}));
  }
  return out;
}

RadarStreamOutput ideal_radar_outputs(Tape& tape, const std::vector<FrustumPillars>& pillars, std::size_t channels) {
  if (channels < kPointFeatures) throw DimensionError("ideal_radar_outputs: need at least 7 channels");
  RadarStreamOutput out;
  for (const FrustumPillars& pl : pillars) {
    const std::size_t cells = pl.cells();
    Tensor occ({pl.depth_bins, 1, pl.columns});
    Tensor ctx({channels, pl.depth_bins, pl.columns});
    std::vector<double> count(cells, 0.0);
    for (std::size_t i = 0; i < pl.placed(); ++i) {
      const auto cell = static_cast<std::size_t>(pl.pillar[i]);
      count[cell] += 1.0;
      for (std::size_t k = 0; k < kPointFeatures; ++k) ctx[k * cells + cell] += pl.features[i][k];
    }
    for (std::size_t cell = 0; cell < cells; ++cell) {
      if (count[cell] == 0.0) continue;
      occ[cell] = 1.0;
      for (std::size_t k = 0; k < kPointFeatures; ++k) ctx[k * cells + cell] /= count[cell];
    }
    out.occupancy.push_back(tape.constant(std::move(occ)));
    out.context.push_back(tape.constant(std::move(ctx)));
  }
  return out;
}

}  // namespace radbev
