// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "radbev/geometry/geometry.hpp"
#include "radbev/numerics/mlp.hpp"
#include "radbev/numerics/tape.hpp"
#include "radbev/radar_stream/point_cloud.hpp"

namespace radbev {

// Transforms every sweep into the current ego frame. poses[k] belongs to
// sweeps[k]. Throws ConfigError on a missing pose or more than 7 sweeps.
RadarPointCloud accumulate_sweeps(const std::vector<RadarPointCloud>& sweeps, const std::vector<EgoPose>& poses);

// Per-point pillar features: u offset in column, d offset in bin (both in
// [-0.5, 0.5]), z / 2 m, rcs / 10 dBsm, vx / 10, vy / 10, sweep / 6.
inline constexpr std::size_t kPointFeatures = 7;

/// Radar points of one camera grouped into (depth bin, frustum column) pillars.
struct FrustumPillars {
  std::size_t depth_bins = 0, columns = 0;
  // Placed points ordered by (column, bin, original index).
  std::vector<std::array<double, kPointFeatures>> features;
  std::vector<std::int64_t> pillar;  // d * columns + column
  std::vector<std::size_t> source;   // index into the input cloud
  std::size_t dropped = 0;

  std::size_t cells() const { return depth_bins * columns; }
  std::size_t placed() const { return features.size(); }
  // Source indices of the points in pillar (column, bin).
  std::vector<std::size_t> points_in(std::size_t column, std::size_t bin) const;
};

// Points outside the camera's horizontal FOV or the depth range are counted
// in `dropped`. Column = floor(u / stride), clamped to the last column.
FrustumPillars voxelize_frustum(const RadarPointCloud& cloud, const CameraRig& rig, std::size_t cam,
                                const DepthBins& bins, std::size_t stride);

/// Pillar encoder: per-point MLP, per-pillar max pool, two 3x3 convs over
/// the (D, W_cols) plane, then context and occupancy heads.
struct RadarEncoderParams {
  MlpParams point_mlp;  // 7 -> F -> F
  Parameter conv1, conv1_b, conv2, conv2_b;  // [F,F,3,3], [F]
  Parameter ctx_w, ctx_b;                    // [F, C], [C]
  Parameter occ_w, occ_b;                    // [F, 1], [1]

  static RadarEncoderParams make(std::size_t channels, std::size_t width, Rng& rng);
  std::size_t channels() const { return ctx_w.value.dim(1); }
  std::size_t width() const { return ctx_w.value.dim(0); }
  void collect(std::vector<Parameter*>& out);
};

/// Per-camera radar features: occupancy [D, 1, W_cols] and context [C, D, W_cols].
struct RadarStreamOutput {
  std::vector<Var> occupancy;
  std::vector<Var> context;

  std::size_t cameras() const { return occupancy.size(); }
  Tensor stacked_occupancy() const;  // [N, D, 1, W_cols]
  Tensor stacked_context() const;    // [N, C, D, W_cols]
};

// occ_softmax normalizes occupancy over D per column instead of a sigmoid
// per cell.
RadarStreamOutput encode_pillars(Tape& tape, const std::vector<FrustumPillars>& pillars, RadarEncoderParams& params,
                                 bool occ_softmax = false);

// Occupancy 1 on non-empty pillars; context = mean raw point features in
// the first 7 channels, zero elsewhere. Requires channels >= 7.
RadarStreamOutput ideal_radar_outputs(Tape& tape, const std::vector<FrustumPillars>& pillars, std::size_t channels);

}  // namespace radbev
