// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "radbev/numerics/rng.hpp"
#include "radbev/numerics/tape.hpp"

namespace radbev {

/// Learned projections of a deformable attention block.
///
/// For each query and head, `n_anchors * n_points` sampling locations are
/// predicted as offsets from the anchors' projected reference points; their
/// attention weights are softmaxed jointly over anchors and points. Offsets
/// have `dims` components: (du, dv) for 2D maps, (du, dv, dd) for lifted
/// depth-weighted maps.
struct DeformAttnParams {
  std::size_t channels = 0;
  std::size_t n_heads = 0;
  std::size_t n_anchors = 0;
  std::size_t n_points = 0;
  std::size_t dims = 2;

  Parameter offset_w;  // [C, heads*anchors*points*dims]
  Parameter offset_b;
  Parameter weight_w;  // [C, heads*anchors*points]
  Parameter weight_b;
  Parameter value_w;   // [C, C], applied per pixel as value_w^T * v
  Parameter value_b;
  Parameter out_w;     // [C, C]
  Parameter out_b;

  // Offsets start at zero and attention weights uniform; value/output
  // projections use the seeded uniform fan-in init.
  static DeformAttnParams make(const std::string& name, std::size_t channels, std::size_t n_heads,
                               std::size_t n_anchors, std::size_t n_points, std::size_t dims, Rng& rng);

  std::size_t head_dim() const { return channels / n_heads; }
  std::size_t samples_per_head() const { return n_anchors * n_points; }
  void collect(std::vector<Parameter*>& out);
};

/// Projected reference points of every (query, anchor) in one view.
struct ReferenceSet {
  std::size_t queries = 0;
  std::size_t anchors = 0;
  std::size_t dims = 2;
  std::vector<double> coords;  // [queries, anchors, dims]; (u, v[, d]) in map cells
  std::vector<bool> valid;     // [queries, anchors]

  ReferenceSet() = default;
  ReferenceSet(std::size_t q, std::size_t a, std::size_t d)
      : queries(q), anchors(a), dims(d), coords(q * a * d, 0.0), valid(q * a, false) {}

  bool any_valid(std::size_t q) const;
};

/// Sampling offsets [Q, H*A*P*dims] and softmaxed weights [Q, H, A*P].
struct SamplingPlan {
  Var offsets;
  Var weights;
};

SamplingPlan plan_sampling(Tape& tape, Var queries, DeformAttnParams& params);

// Absolute sampling locations: reference + offset, [Q, H*A*P*dims].
Var sampling_locations(const SamplingPlan& plan, const ReferenceSet& ref, const DeformAttnParams& params);

// Per-pixel value projection of a [C, H, W] map.
Var project_value(Tape& tape, Var map, DeformAttnParams& params);

// ---- Sampling cores (no projections). Output [Q, C]. -------------------

// Weighted bilinear samples of value [C,H,W] at locations (dims = 2).
Var sample_2d(Var value, Var locations, Var weights, const ReferenceSet& ref, const DeformAttnParams& params);

// Depth-weighted trilinear samples of the lifted map depth_weight (x) value
// without materializing it: each bilinear corner's context is scaled by the
// depth weight linearly interpolated along d at that corner (dims = 3).
Var sample_3d_factored(Var value, Var depth_weight, Var locations, Var weights, const ReferenceSet& ref,
                       const DeformAttnParams& params);

// Outer product value[C,H,W] (x) depth_weight[D,H,W] -> [C,D,H,W]. Throws
// ResourceError if the result would exceed `element_budget` elements.
Var lift_outer(Var value, Var depth_weight, std::size_t element_budget);

// Trilinear samples of a materialized [C,D,H,W] map (dims = 3).
Var sample_3d_dense(Var lifted, Var locations, Var weights, const ReferenceSet& ref, const DeformAttnParams& params);

// ---- Single-view attention with projections. ---------------------------

Var deform_attn_2d(Var value, Var queries, const ReferenceSet& ref, DeformAttnParams& params);
Var deform_attn_3d_factored(Var context, Var depth_weight, Var queries, const ReferenceSet& ref,
                            DeformAttnParams& params);

inline constexpr std::size_t kDefaultLiftBudget = 100'000'000;
Var deform_attn_3d_naive(Var context, Var depth_weight, Var queries, const ReferenceSet& ref,
                         DeformAttnParams& params, std::size_t element_budget = kDefaultLiftBudget);

// ---- Multi-view. -------------------------------------------------------

// Number of views in which any anchor of query q is visible.
std::vector<int> hit_counts(const std::vector<const ReferenceSet*>& refs);

// Sum of per-view [Q,C] outputs divided by max(hit_counts[q], 1).
Var multi_camera_aggregate(const std::vector<Var>& per_camera, const std::vector<int>& hit_counts);

enum class SamplingKernel { bilinear_2d, factored_3d, naive_3d };

struct ViewInput {
  Var value;                      // [C,H,W] unprojected
  Var depth_weight;               // [D,H,W]; unused for bilinear_2d
  const ReferenceSet* ref = nullptr;
};

// Shared offsets/weights from the queries, per-view sampling, camera
// averaging and output projection. Returns [Q, C].
Var multi_view_deform_attn(Var queries, const std::vector<ViewInput>& views, DeformAttnParams& params,
                           SamplingKernel kernel);

}  // namespace radbev
