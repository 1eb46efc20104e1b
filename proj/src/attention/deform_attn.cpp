// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/attention/deform_attn.hpp"

#include <array>
#include <cmath>

#include "radbev/errors.hpp"
#include "radbev/numerics/mlp.hpp"
#include "radbev/numerics/ops.hpp"
#include "radbev/numerics/parallel.hpp"

namespace radbev {

DeformAttnParams DeformAttnParams::make(const std::string& name, std::size_t channels, std::size_t n_heads,
                                        std::size_t n_anchors, std::size_t n_points, std::size_t dims, Rng& rng) {
  if (n_heads == 0 || channels % n_heads != 0) {
    throw DimensionError("deform_attn '" + name + "': channels must divide evenly into heads");
  }
  if (dims != 2 && dims != 3) throw DimensionError("deform_attn '" + name + "': dims must be 2 or 3");
  if (n_anchors == 0 || n_points == 0) throw DimensionError("deform_attn '" + name + "': empty sampling set");
  DeformAttnParams p;
  p.channels = channels;
  p.n_heads = n_heads;
  p.n_anchors = n_anchors;
  p.n_points = n_points;
  p.dims = dims;
  const std::size_t samples = n_heads * n_anchors * n_points;
  p.offset_w = Parameter(name + ".offset_w", Tensor({channels, samples * dims}));
  p.offset_b = Parameter(name + ".offset_b", Tensor({samples * dims}), false);
  p.weight_w = Parameter(name + ".weight_w", Tensor({channels, samples}));
  p.weight_b = Parameter(name + ".weight_b", Tensor({samples}), false);
  p.value_w = Parameter(name + ".value_w", uniform_init({channels, channels}, channels, rng));
  p.value_b = Parameter(name + ".value_b", Tensor({channels}), false);
  p.out_w = Parameter(name + ".out_w", uniform_init({channels, channels}, channels, rng));
  p.out_b = Parameter(name + ".out_b", Tensor({channels}), false);
  return p;
}

void DeformAttnParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&offset_w, &offset_b, &weight_w, &weight_b, &value_w, &value_b, &out_w, &out_b}) {
    out.push_back(p);
  }
}

bool ReferenceSet::any_valid(std::size_t q) const {
  for (std::size_t a = 0; a < anchors; ++a) {
    if (valid[q * anchors + a]) return true;
  }
  return false;
}

namespace {

void check_ref(const ReferenceSet& ref, const DeformAttnParams& p, std::size_t queries) {
  if (ref.queries != queries) throw DimensionError("deform_attn: reference set has wrong query count");
  if (ref.anchors != p.n_anchors) throw DimensionError("deform_attn: reference set has wrong anchor count");
  if (ref.dims != p.dims) throw DimensionError("deform_attn: reference dims do not match params");
}

struct Corner2 {
  long x, y;
  double w, dwdu, dwdv;
};

inline std::array<Corner2, 4> corners2(double u, double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const long x0 = static_cast<long>(fu), y0 = static_cast<long>(fv);
  const double ax = u - fu, ay = v - fv;
  return {{{x0, y0, (1 - ax) * (1 - ay), -(1 - ay), -(1 - ax)},
           {x0 + 1, y0, ax * (1 - ay), (1 - ay), -ax},
           {x0, y0 + 1, (1 - ax) * ay, -ay, (1 - ax)},
           {x0 + 1, y0 + 1, ax * ay, ay, ax}}};
}

inline bool inside(long x, long y, std::size_t w, std::size_t h) {
  return x >= 0 && y >= 0 && x < static_cast<long>(w) && y < static_cast<long>(h);
}

// Geometry of one sampling pass, shared by forward and backward.
struct CoreShape {
  std::size_t q, heads, anchors, points, dims, hd, c, h, w;
  std::size_t ap() const { return anchors * points; }
  std::size_t hw() const { return h * w; }
};

CoreShape core_shape(const Tensor& value, const Tensor& loc, const Tensor& weights, const ReferenceSet& ref,
                     const DeformAttnParams& p) {
  if (value.rank() != 3) throw DimensionError("deform_attn: value map must be [C,H,W]");
  if (value.dim(0) != p.channels) throw DimensionError("deform_attn: value channels do not match params");
  const std::size_t q = ref.queries;
  check_ref(ref, p, q);
  if (loc.size() != q * p.n_heads * p.samples_per_head() * p.dims) {
    throw DimensionError("deform_attn: location tensor size mismatch");
  }
  if (weights.size() != q * p.n_heads * p.samples_per_head()) {
    throw DimensionError("deform_attn: weight tensor size mismatch");
  }
  return {q, p.n_heads, p.n_anchors, p.n_points, p.dims, p.head_dim(), p.channels, value.dim(1), value.dim(2)};
}

// Linear interpolation of depth_weight[:, pix] at continuous bin d with
// zero padding; also returns d(score)/dd.
inline double depth_score(const double* dw, std::size_t depth_bins, std::size_t hw, std::size_t pix, long d0,
                          double ld, double* dscore) {
  const double a = (d0 >= 0 && d0 < static_cast<long>(depth_bins)) ? dw[static_cast<std::size_t>(d0) * hw + pix] : 0.0;
  const double b = (d0 + 1 >= 0 && d0 + 1 < static_cast<long>(depth_bins))
                       ? dw[static_cast<std::size_t>(d0 + 1) * hw + pix]
                       : 0.0;
  *dscore = b - a;
  return (1.0 - ld) * a + ld * b;
}

// Forward of the bilinear (Depth = false) and depth-weighted factored
// (Depth = true) cores. Accumulation order per query: head, anchor, point,
// corner.
template <bool Depth>
Tensor core_forward(const CoreShape& s, const Tensor& value, const Tensor* depth, const Tensor& loc,
                    const Tensor& weights, const ReferenceSet& ref) {
  Tensor out({s.q, s.c});
  const std::size_t hw = s.hw();
  const std::size_t depth_bins = Depth ? depth->dim(0) : 0;
  parallel_for(s.q, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      double* orow = out.data() + q * s.c;
      for (std::size_t h = 0; h < s.heads; ++h) {
        for (std::size_t a = 0; a < s.anchors; ++a) {
          if (!ref.valid[q * s.anchors + a]) continue;
          for (std::size_t p = 0; p < s.points; ++p) {
            const std::size_t sidx = ((q * s.heads + h) * s.anchors + a) * s.points + p;
            const double wt = weights[sidx];
            const double* l = loc.data() + sidx * s.dims;
            long d0 = 0;
            double ld = 0.0;
            if constexpr (Depth) {
              const double fd = std::floor(l[2]);
              d0 = static_cast<long>(fd);
              ld = l[2] - fd;
            }
            for (const Corner2& k : corners2(l[0], l[1])) {
              if (!inside(k.x, k.y, s.w, s.h)) continue;
              const std::size_t pix = static_cast<std::size_t>(k.y) * s.w + static_cast<std::size_t>(k.x);
              double coef = wt * k.w;
              if constexpr (Depth) {
                double unused = 0.0;
                coef *= depth_score(depth->data(), depth_bins, hw, pix, d0, ld, &unused);
              }
              const double* vcol = value.data() + (h * s.hd) * hw + pix;
              for (std::size_t c = 0; c < s.hd; ++c) orow[h * s.hd + c] += coef * vcol[c * hw];
            }
          }
        }
      }
    }
  });
  return out;
}

template <bool Depth>
void core_backward(const CoreShape& s, const Tensor& value, const Tensor* depth, const Tensor& loc,
                   const Tensor& weights, const ReferenceSet& ref, const Tensor& g, Tensor* gvalue, Tensor* gdepth,
                   Tensor* gloc, Tensor* gweights) {
  const std::size_t hw = s.hw();
  const std::size_t depth_bins = Depth ? depth->dim(0) : 0;
  for (std::size_t q = 0; q < s.q; ++q) {
    const double* grow = g.data() + q * s.c;
    for (std::size_t h = 0; h < s.heads; ++h) {
      for (std::size_t a = 0; a < s.anchors; ++a) {
        if (!ref.valid[q * s.anchors + a]) continue;
        for (std::size_t p = 0; p < s.points; ++p) {
          const std::size_t sidx = ((q * s.heads + h) * s.anchors + a) * s.points + p;
          const double wt = weights[sidx];
          const double* l = loc.data() + sidx * s.dims;
          long d0 = 0;
          double ld = 0.0;
          if constexpr (Depth) {
            const double fd = std::floor(l[2]);
            d0 = static_cast<long>(fd);
            ld = l[2] - fd;
          }
          double gu = 0.0, gv = 0.0, gd = 0.0, gw = 0.0;
          for (const Corner2& k : corners2(l[0], l[1])) {
            if (!inside(k.x, k.y, s.w, s.h)) continue;
            const std::size_t pix = static_cast<std::size_t>(k.y) * s.w + static_cast<std::size_t>(k.x);
            double score = 1.0, dscore = 0.0;
            if constexpr (Depth) score = depth_score(depth->data(), depth_bins, hw, pix, d0, ld, &dscore);
            const double* vcol = value.data() + (h * s.hd) * hw + pix;
            double dot = 0.0;
            for (std::size_t c = 0; c < s.hd; ++c) dot += grow[h * s.hd + c] * vcol[c * hw];
            if (gvalue) {
              double* gcol = gvalue->data() + (h * s.hd) * hw + pix;
              const double coef = wt * k.w * score;
              for (std::size_t c = 0; c < s.hd; ++c) gcol[c * hw] += coef * grow[h * s.hd + c];
            }
            gw += k.w * score * dot;
            gu += wt * k.dwdu * score * dot;
            gv += wt * k.dwdv * score * dot;
            if constexpr (Depth) {
              gd += wt * k.w * dscore * dot;
              if (gdepth) {
                const double base = wt * k.w * dot;
                if (d0 >= 0 && d0 < static_cast<long>(depth_bins)) {
                  (*gdepth)[static_cast<std::size_t>(d0) * hw + pix] += base * (1.0 - ld);
                }
                if (d0 + 1 >= 0 && d0 + 1 < static_cast<long>(depth_bins)) {
                  (*gdepth)[static_cast<std::size_t>(d0 + 1) * hw + pix] += base * ld;
                }
              }
            }
          }
          if (gweights) (*gweights)[sidx] += gw;
          if (gloc) {
            (*gloc)[sidx * s.dims + 0] += gu;
            (*gloc)[sidx * s.dims + 1] += gv;
            if constexpr (Depth) (*gloc)[sidx * s.dims + 2] += gd;
          }
        }
      }
    }
  }
}

}  // namespace

SamplingPlan plan_sampling(Tape& tape, Var queries, DeformAttnParams& params) {
  const Tensor& qv = queries.value();
  if (qv.rank() != 2 || qv.dim(1) != params.channels) {
    throw DimensionError("deform_attn: queries must be [Q, C] with C = " + std::to_string(params.channels));
  }
  const std::size_t q = qv.dim(0);
  SamplingPlan plan;
  plan.offsets = ops::add_row_bias(ops::matmul(queries, tape.param(params.offset_w)), tape.param(params.offset_b));
  Var logits = ops::add_row_bias(ops::matmul(queries, tape.param(params.weight_w)), tape.param(params.weight_b));
  logits = ops::reshape(logits, {q, params.n_heads, params.samples_per_head()});
  plan.weights = ops::softmax(logits, 2);
  return plan;
}

Var sampling_locations(const SamplingPlan& plan, const ReferenceSet& ref, const DeformAttnParams& params) {
  const Tensor& off = plan.offsets.value();
  check_ref(ref, params, off.dim(0));
  Tensor base(off.shape());
  const std::size_t heads = params.n_heads, anchors = params.n_anchors, points = params.n_points, dims = params.dims;
  for (std::size_t q = 0; q < ref.queries; ++q)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t a = 0; a < anchors; ++a)
        for (std::size_t p = 0; p < points; ++p)
          for (std::size_t k = 0; k < dims; ++k) {
            base[((((q * heads + h) * anchors + a) * points + p) * dims) + k] = ref.coords[(q * anchors + a) * dims + k];
          }
  Tape& tape = plan.offsets.tape();
  return ops::add(plan.offsets, tape.constant(std::move(base)));
}

Var project_value(Tape& tape, Var map, DeformAttnParams& params) {
  const Shape shape = map.shape();
  if (shape.size() != 3 || shape[0] != params.channels) {
    throw DimensionError("deform_attn: value map must be [C,H,W] with C = " + std::to_string(params.channels));
  }
  Var flat = ops::reshape(map, {shape[0], shape[1] * shape[2]});
  Var proj = ops::matmul(ops::transpose(tape.param(params.value_w)), flat);
  proj = ops::add_col_bias(proj, tape.param(params.value_b));
  return ops::reshape(proj, shape);
}

Var sample_2d(Var value, Var locations, Var weights, const ReferenceSet& ref, const DeformAttnParams& params) {
  if (params.dims != 2) throw DimensionError("sample_2d: params are not two-dimensional");
  const CoreShape s = core_shape(value.value(), locations.value(), weights.value(), ref, params);
  Tensor out = core_forward<false>(s, value.value(), nullptr, locations.value(), weights.value(), ref);
  return value.tape().record(std::move(out), {value, locations, weights},
                             [value, locations, weights, &ref, s](Tape& t, const Tensor& g) {
                               core_backward<false>(s, t.value(value), nullptr, t.value(locations), t.value(weights),
                                                    ref, g, t.requires_grad(value) ? &t.grad(value) : nullptr,
                                                    nullptr, t.requires_grad(locations) ? &t.grad(locations) : nullptr,
                                                    t.requires_grad(weights) ? &t.grad(weights) : nullptr);
                             });
}

Var sample_3d_factored(Var value, Var depth_weight, Var locations, Var weights, const ReferenceSet& ref,
                       const DeformAttnParams& params) {
  if (params.dims != 3) throw DimensionError("sample_3d_factored: params are not three-dimensional");
  const CoreShape s = core_shape(value.value(), locations.value(), weights.value(), ref, params);
  const Tensor& dw = depth_weight.value();
  if (dw.rank() != 3 || dw.dim(1) != s.h || dw.dim(2) != s.w) {
    throw DimensionError("sample_3d_factored: depth weight " + shape_str(dw.shape()) + " does not match value " +
                         shape_str(value.shape()));
  }
  Tensor out = core_forward<true>(s, value.value(), &dw, locations.value(), weights.value(), ref);
  return value.tape().record(
      std::move(out), {value, depth_weight, locations, weights},
      [value, depth_weight, locations, weights, &ref, s](Tape& t, const Tensor& g) {
        core_backward<true>(s, t.value(value), &t.value(depth_weight), t.value(locations), t.value(weights), ref, g,
                            t.requires_grad(value) ? &t.grad(value) : nullptr,
                            t.requires_grad(depth_weight) ? &t.grad(depth_weight) : nullptr,
                            t.requires_grad(locations) ? &t.grad(locations) : nullptr,
                            t.requires_grad(weights) ? &t.grad(weights) : nullptr);
      });
}

Var lift_outer(Var value, Var depth_weight, std::size_t element_budget) {
  const Tensor& v = value.value();
  const Tensor& dw = depth_weight.value();
  if (v.rank() != 3 || dw.rank() != 3 || v.dim(1) != dw.dim(1) || v.dim(2) != dw.dim(2)) {
    throw DimensionError("lift_outer: value " + shape_str(v.shape()) + " and depth weight " +
                         shape_str(dw.shape()) + " disagree in H, W");
  }
  const std::size_t c = v.dim(0), d = dw.dim(0), hw = v.dim(1) * v.dim(2);
  const std::size_t elements = c * d * hw;
  if (elements > element_budget) {
    throw ResourceError("lift_outer: " + std::to_string(elements) + " elements exceed budget " +
                        std::to_string(element_budget));
  }
  Tensor out({c, d, v.dim(1), v.dim(2)});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < hw; ++i) out[(ch * d + k) * hw + i] = v[ch * hw + i] * dw[k * hw + i];
  return value.tape().record(std::move(out), {value, depth_weight}, [value, depth_weight, c, d, hw](Tape& t, const Tensor& g) {
    const Tensor& v = t.value(value);
    const Tensor& dw = t.value(depth_weight);
    Tensor* gv = t.requires_grad(value) ? &t.grad(value) : nullptr;
    Tensor* gd = t.requires_grad(depth_weight) ? &t.grad(depth_weight) : nullptr;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < hw; ++i) {
          const double gi = g[(ch * d + k) * hw + i];
          if (gv) (*gv)[ch * hw + i] += gi * dw[k * hw + i];
          if (gd) (*gd)[k * hw + i] += gi * v[ch * hw + i];
        }
      }
    }
  });
}

Var sample_3d_dense(Var lifted, Var locations, Var weights, const ReferenceSet& ref, const DeformAttnParams& params) {
  if (params.dims != 3) throw DimensionError("sample_3d_dense: params are not three-dimensional");
  const Tensor& x = lifted.value();
  if (x.rank() != 4 || x.dim(0) != params.channels) throw DimensionError("sample_3d_dense: lifted map must be [C,D,H,W]");
  check_ref(ref, params, ref.queries);
  const std::size_t q_count = ref.queries, heads = params.n_heads, anchors = params.n_anchors,
                    points = params.n_points, hd = params.head_dim(), c = params.channels;
  const std::size_t depth = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (locations.value().size() != q_count * heads * anchors * points * 3 ||
      weights.value().size() != q_count * heads * anchors * points) {
    throw DimensionError("sample_3d_dense: location/weight size mismatch");
  }

  // Visits the up-to-8 in-bounds trilinear corners of (u, v, d).
  auto for_corners = [depth, h, w](const double* l, auto&& fn) {
    const double fu = std::floor(l[0]), fv = std::floor(l[1]), fd = std::floor(l[2]);
    const double ax = l[0] - fu, ay = l[1] - fv, az = l[2] - fd;
    const long x0 = static_cast<long>(fu), y0 = static_cast<long>(fv), z0 = static_cast<long>(fd);
    for (int dz = 0; dz < 2; ++dz) {
      const long z = z0 + dz;
      if (z < 0 || z >= static_cast<long>(depth)) continue;
      const double wz = dz ? az : 1.0 - az;
      const double dwz = dz ? 1.0 : -1.0;
      for (int dy = 0; dy < 2; ++dy) {
        const long y = y0 + dy;
        if (y < 0 || y >= static_cast<long>(h)) continue;
        const double wy = dy ? ay : 1.0 - ay;
        const double dwy = dy ? 1.0 : -1.0;
        for (int dx = 0; dx < 2; ++dx) {
          const long xx = x0 + dx;
          if (xx < 0 || xx >= static_cast<long>(w)) continue;
          const double wx = dx ? ax : 1.0 - ax;
          const double dwx = dx ? 1.0 : -1.0;
          const std::size_t cell = (static_cast<std::size_t>(z) * h + static_cast<std::size_t>(y)) * w +
                                   static_cast<std::size_t>(xx);
          fn(cell, wx * wy * wz, dwx * wy * wz, wx * dwy * wz, wx * wy * dwz);
        }
      }
    }
  };

  const std::size_t plane = depth * h * w;
  const Tensor& loc = locations.value();
  const Tensor& wts = weights.value();
  Tensor out({q_count, c});
  for (std::size_t q = 0; q < q_count; ++q) {
    for (std::size_t hh = 0; hh < heads; ++hh)
      for (std::size_t a = 0; a < anchors; ++a) {
        if (!ref.valid[q * anchors + a]) continue;
        for (std::size_t p = 0; p < points; ++p) {
          const std::size_t sidx = ((q * heads + hh) * anchors + a) * points + p;
          const double wt = wts[sidx];
          for_corners(loc.data() + sidx * 3, [&](std::size_t cell, double cw, double, double, double) {
            for (std::size_t ch = 0; ch < hd; ++ch) {
              out[q * c + hh * hd + ch] += wt * cw * x[(hh * hd + ch) * plane + cell];
            }
          });
        }
      }
  }
  return lifted.tape().record(
      std::move(out), {lifted, locations, weights},
      [lifted, locations, weights, &ref, for_corners, q_count, heads, anchors, points, hd, c, plane](
          Tape& t, const Tensor& g) {
        const Tensor& x = t.value(lifted);
        const Tensor& loc = t.value(locations);
        const Tensor& wts = t.value(weights);
        Tensor* gx = t.requires_grad(lifted) ? &t.grad(lifted) : nullptr;
        Tensor* gl = t.requires_grad(locations) ? &t.grad(locations) : nullptr;
        Tensor* gw = t.requires_grad(weights) ? &t.grad(weights) : nullptr;
        for (std::size_t q = 0; q < q_count; ++q) {
          for (std::size_t hh = 0; hh < heads; ++hh)
            for (std::size_t a = 0; a < anchors; ++a) {
              if (!ref.valid[q * anchors + a]) continue;
              for (std::size_t p = 0; p < points; ++p) {
                const std::size_t sidx = ((q * heads + hh) * anchors + a) * points + p;
                const double wt = wts[sidx];
                double gu = 0.0, gv = 0.0, gd = 0.0, gwt = 0.0;
                for_corners(loc.data() + sidx * 3, [&](std::size_t cell, double cw, double du, double dv, double dd) {
                  double dot = 0.0;
                  for (std::size_t ch = 0; ch < hd; ++ch) {
                    const double gq = g[q * c + hh * hd + ch];
                    dot += gq * x[(hh * hd + ch) * plane + cell];
                    if (gx) (*gx)[(hh * hd + ch) * plane + cell] += wt * cw * gq;
                  }
                  gwt += cw * dot;
                  gu += wt * du * dot;
                  gv += wt * dv * dot;
                  gd += wt * dd * dot;
                });
                if (gw) (*gw)[sidx] += gwt;
                if (gl) {
                  (*gl)[sidx * 3 + 0] += gu;
                  (*gl)[sidx * 3 + 1] += gv;
                  (*gl)[sidx * 3 + 2] += gd;
                }
              }
            }
        }
      });
}

namespace {

Var output_projection(Tape& tape, Var x, DeformAttnParams& params) {
  return ops::add_row_bias(ops::matmul(x, tape.param(params.out_w)), tape.param(params.out_b));
}

}  // namespace

Var deform_attn_2d(Var value, Var queries, const ReferenceSet& ref, DeformAttnParams& params) {
  Tape& tape = queries.tape();
  const SamplingPlan plan = plan_sampling(tape, queries, params);
  Var loc = sampling_locations(plan, ref, params);
  Var sampled = sample_2d(project_value(tape, value, params), loc, plan.weights, ref, params);
  return output_projection(tape, sampled, params);
}

Var deform_attn_3d_factored(Var context, Var depth_weight, Var queries, const ReferenceSet& ref,
                            DeformAttnParams& params) {
  Tape& tape = queries.tape();
  const SamplingPlan plan = plan_sampling(tape, queries, params);
  Var loc = sampling_locations(plan, ref, params);
  Var sampled = sample_3d_factored(project_value(tape, context, params), depth_weight, loc, plan.weights, ref, params);
  return output_projection(tape, sampled, params);
}

Var deform_attn_3d_naive(Var context, Var depth_weight, Var queries, const ReferenceSet& ref,
                         DeformAttnParams& params, std::size_t element_budget) {
  Tape& tape = queries.tape();
  const SamplingPlan plan = plan_sampling(tape, queries, params);
  Var loc = sampling_locations(plan, ref, params);
  Var lifted = lift_outer(project_value(tape, context, params), depth_weight, element_budget);
  Var sampled = sample_3d_dense(lifted, loc, plan.weights, ref, params);
  return output_projection(tape, sampled, params);
}

std::vector<int> hit_counts(const std::vector<const ReferenceSet*>& refs) {
  if (refs.empty()) return {};
  std::vector<int> hits(refs.front()->queries, 0);
  for (const ReferenceSet* r : refs) {
    if (r->queries != hits.size()) throw DimensionError("hit_counts: views disagree on query count");
    for (std::size_t q = 0; q < hits.size(); ++q) hits[q] += r->any_valid(q) ? 1 : 0;
  }
  return hits;
}

Var multi_camera_aggregate(const std::vector<Var>& per_camera, const std::vector<int>& hits) {
  if (per_camera.empty()) throw DimensionError("multi_camera_aggregate: no views");
  Var total = per_camera.front();
  for (std::size_t i = 1; i < per_camera.size(); ++i) total = ops::add(total, per_camera[i]);
  std::vector<double> inv(hits.size());
  for (std::size_t q = 0; q < hits.size(); ++q) inv[q] = 1.0 / static_cast<double>(std::max(hits[q], 1));
  return ops::scale_rows(total, inv);
}

Var multi_view_deform_attn(Var queries, const std::vector<ViewInput>& views, DeformAttnParams& params,
                           SamplingKernel kernel) {
  if (views.empty()) throw DimensionError("multi_view_deform_attn: no views");
  Tape& tape = queries.tape();
  const SamplingPlan plan = plan_sampling(tape, queries, params);
  std::vector<Var> per_view;
  std::vector<const ReferenceSet*> refs;
  for (const ViewInput& view : views) {
    Var loc = sampling_locations(plan, *view.ref, params);
    Var value = project_value(tape, view.value, params);
    switch (kernel) {
      case SamplingKernel::bilinear_2d:
        per_view.push_back(sample_2d(value, loc, plan.weights, *view.ref, params));
        break;
      case SamplingKernel::factored_3d:
        per_view.push_back(sample_3d_factored(value, view.depth_weight, loc, plan.weights, *view.ref, params));
        break;
      case SamplingKernel::naive_3d:
        per_view.push_back(
            sample_3d_dense(lift_outer(value, view.depth_weight, kDefaultLiftBudget), loc, plan.weights, *view.ref, params));
        break;
    }
    refs.push_back(view.ref);
  }
  Var agg = multi_camera_aggregate(per_view, hit_counts(refs));
  return output_projection(tape, agg, params);
}

}  // namespace radbev
