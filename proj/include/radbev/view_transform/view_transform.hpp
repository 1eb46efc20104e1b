// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radbev/attention/deform_attn.hpp"
#include "radbev/camera_stream/camera_stream.hpp"
#include "radbev/numerics/mlp.hpp"
#include "radbev/radar_stream/radar_stream.hpp"
#include "radbev/scene_sim/scene.hpp"

namespace radbev {

enum class RadarContextView { frustum, bev };

struct EncoderConfig {
  std::size_t n_layers = 1;
  bool use_ddsca = true;
  bool use_rosca = true;
  bool use_rcsca = true;
  std::size_t ffn_width = 32;
  std::string norm = "post";  // residual + layer norm after each sub-block
  std::size_t n_heads = 2;
  std::size_t n_points = 4;
  bool fuse_once = false;   // keep image/radar-guided streams apart until after the last layer
  bool share_attn = false;  // rosca reuses the ddsca projections
  RadarContextView rcsca_view = RadarContextView::frustum;
  bool radar_occ_softmax = false;

  // Toggle sets of the module ablation: 'A' ddsca, 'B' +rosca, 'C' +rcsca, 'D' all.
  static EncoderConfig preset(char name);
  // Throws ConfigError for zero layers, unknown norm tags or zero widths.
  void validate() const;
};

/// Pillar reference points projected into every camera.
struct ViewGeometry {
  std::vector<ReferenceSet> image;    // per camera; anchors = z anchors, (u, v, d_idx)
  std::vector<ReferenceSet> frustum;  // per camera; (u_col, d_idx) on the radar context plane
  std::vector<int> hit_counts;        // per BEV cell
  std::vector<bool> hit_mask;
  // Frustum cell (d * W_cols + col) of each camera -> BEV cell, or -1.
  std::vector<std::vector<std::int64_t>> bev_splat;
  ReferenceSet bev_self;  // one anchor per cell at its own (j, i) on a [C, X, Y] map
};

ViewGeometry build_view_geometry(const SensorSetup& setup);

/// BEV queries and staged features, stored as [Q, C] with q = i*Y + j.
struct BevState {
  Var query;
  Var b_i, b_r, b_ir, b_encoded;  // stages of the last layer; b_i / b_r may be invalid when disabled
  std::vector<int> hit_counts;
  std::vector<bool> hit_mask;
};

// [Q, C] -> [C, X, Y].
Tensor bev_map(const Tensor& rows, std::size_t x_cells, std::size_t y_cells);
// Per-cell L2 norm over channels of [Q, C], as an [X, Y] map.
Tensor bev_channel_norm(const Tensor& rows, std::size_t x_cells, std::size_t y_cells);

struct EncoderLayerParams {
  DeformAttnParams ddsca;
  DeformAttnParams rosca;
  MlpParams fusion;  // xi: 2C -> 2C -> C
  DeformAttnParams rcsca;
  Parameter ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
  MlpParams ffn;
};

struct EncoderParams {
  Parameter query;  // [Q, C]
  std::vector<EncoderLayerParams> layers;

  static EncoderParams make(const EncoderConfig& cfg, const SensorSetup& setup, std::size_t channels, Rng& rng);
  std::size_t channels() const { return query.value.dim(1); }
  void collect(std::vector<Parameter*>& out);
};

// xi initialized to the exact average (a + b) / 2 of its two inputs.
MlpParams make_fusion_mlp(const std::string& name, std::size_t channels);

// O_IR per camera: I_O [1,H,W] times R_O [D,1,W_cols] with pixel column w
// reading radar column floor(w / stride). Throws ConfigError when R_O has
// a different bin count from `bins`.
std::vector<Var> radar_image_occupancy(const ImageStreamOutput& img, const RadarStreamOutput& radar,
                                       const DepthBins& bins, std::size_t stride);

// Depth-weighted attention over I_C with weight I_D. Returns B_I [Q, C].
Var ddsca(Var queries, const ImageStreamOutput& img, const ViewGeometry& geo, DeformAttnParams& params);

// Depth-weighted attention over I_C with weight O_IR. Returns B_R [Q, C].
Var rosca(Var queries, const ImageStreamOutput& img, const std::vector<Var>& o_ir, const ViewGeometry& geo,
          DeformAttnParams& params);

// xi(B_I ; B_R) at hit cells, the query at miss cells. Either branch may be
// absent, in which case the present one is used directly at hit cells.
Var fuse_bev(std::optional<Var> b_i, std::optional<Var> b_r, Var query, const std::vector<bool>& hit_mask,
             MlpParams& fusion);

// B_IR plus attention over the radar context. The frustum view samples each
// camera's [C, D, W_cols] plane at (u_col, d_idx); the BEV view first
// splats the plane to its nearest BEV cell and samples at the query's own cell.
Var rcsca(Var b_ir, const RadarStreamOutput& radar, const ViewGeometry& geo, const SensorSetup& setup,
          DeformAttnParams& params, RadarContextView view = RadarContextView::frustum);

// Stacked encoder layers. `radar` may be null when the configuration uses
// neither rosca nor rcsca. `initial_query` overrides the learned query.
// `geo` must outlive the tape's backward pass.
BevState encoder_forward(Tape& tape, const ImageStreamOutput& img, const RadarStreamOutput* radar,
                         const ViewGeometry& geo, const SensorSetup& setup, EncoderParams& params,
                         const EncoderConfig& cfg, std::optional<Var> initial_query = std::nullopt);

struct RaySeparation {
  double score = 0.0;
  bool degenerate = false;  // a zero-norm feature was involved
};

// 1 - cosine similarity of rows a and b of a [Q, C] feature matrix.
RaySeparation ray_separation_score(const Tensor& features, std::size_t cell_a, std::size_t cell_b);

}  // namespace radbev
