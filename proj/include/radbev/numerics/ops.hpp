// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radbev/numerics/tape.hpp"

// Fixed vocabulary of differentiable operations. Every op records its own
// backward rule on the tape of its first operand.
//
// Layout conventions: feature maps are channel-major [C, H, W]; per-row
// matrices are [rows, features]. Out-of-bounds sampling reads zeros.
namespace radbev::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);

// [m,k] x [k,n] -> [m,n]
Var matmul(Var a, Var b);
Var transpose(Var a);
// x[m,n] + b[n] broadcast over rows.
Var add_row_bias(Var x, Var b);
// x[m,n] + b[m] broadcast over columns (channel bias for [C, H*W] maps).
Var add_col_bias(Var x, Var b);

Var reshape(Var a, Shape shape);
// [m,n1] ++ [m,n2] -> [m,n1+n2]
Var concat_cols(Var a, Var b);

Var sum(Var a);
Var mean(Var a);
// sum(a * w) for a constant weight tensor of the same shape.
Var dot_const(Var a, const Tensor& w);

// Numerically stable softmax along `axis`.
Var softmax(Var x, std::size_t axis);

// 3x3 cross-correlation, stride 1, zero padding 1. map [Cin,H,W],
// kernel [Cout,Cin,3,3] -> [Cout,H,W].
Var conv2d_lite(Var map, Var kernel);

// Bilinear sample of map [C,H,W] at pixel coordinates uv = (u, v), where u
// indexes columns and v rows. Integer coordinates hit cells exactly; cells
// outside the map contribute zero. Differentiable in both map and uv.
Var bilinear_sample(Var map, Var uv);

// Per-row layer normalization with affine gamma[n], beta[n].
Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);

// Row r multiplied by s[r].
Var scale_rows(Var x, const std::vector<double>& s);
// Row r taken from a where take_a[r], else from b.
Var select_rows(const std::vector<bool>& take_a, Var a, Var b);
// Row r multiplied by 0/1 mask[r].
Var mask_rows(Var x, const std::vector<bool>& keep);

// Max over rows of x [P,F] grouped by segment id; result [n_segments,F].
// Segments with no rows are zero. Ties resolve to the lowest row index.
Var segment_max(Var x, const std::vector<std::int64_t>& segment, std::size_t n_segments);

// Columns of x [C,M] averaged into n_targets bins; target[m] < 0 drops column m.
Var scatter_mean_cols(Var x, const std::vector<std::int64_t>& target, std::size_t n_targets);

// occ [1,H,W] (or [H,W]) times radar [D,Wc] with pixel column w reading radar
// column min(w / stride, Wc - 1). Result [D,H,W].
Var column_outer(Var occ, Var radar, std::size_t stride);

// Mean softmax cross-entropy over columns of logits [K,Q] with integer labels.
Var cross_entropy_cols(Var logits, const std::vector<int>& labels);

}  // namespace radbev::ops
