// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/view_transform/view_transform.hpp"

#include <cmath>

#include "radbev/errors.hpp"
#include "radbev/numerics/ops.hpp"

namespace radbev {

EncoderConfig EncoderConfig::preset(char name) {
  EncoderConfig c;
  switch (name) {
    case 'A':
      c.use_rosca = false;
      c.use_rcsca = false;
      break;
    case 'B':
      c.use_rcsca = false;
      break;
    case 'C':
      c.use_rosca = false;
      break;
    case 'D':
      break;
    default:
      throw ConfigError(std::string("unknown encoder preset '") + name + "'");
  }
  return c;
}

void EncoderConfig::validate() const {
  if (n_layers < 1) throw ConfigError("encoder: n_layers must be at least 1");
  if (ffn_width < 1 || n_heads < 1 || n_points < 1) throw ConfigError("encoder: widths must be positive");
  if (norm != "post") throw ConfigError("encoder: unsupported norm placement '" + norm + "'");
}

ViewGeometry build_view_geometry(const SensorSetup& setup) {
  setup.validate();
  const BevGrid& grid = setup.grid;
  const Tensor pillars = pillar_reference_points(grid);
  const std::size_t q_count = grid.cells(), nz = grid.z_anchors.size();
  const double stride = static_cast<double>(setup.radar_stride);
  ViewGeometry geo;
  for (std::size_t cam = 0; cam < setup.rig.size(); ++cam) {
    const Camera& c = setup.rig.cameras[cam];
    ReferenceSet image(q_count, nz, 3), frustum(q_count, nz, 2);
    for (std::size_t q = 0; q < q_count; ++q) {
      for (std::size_t k = 0; k < nz; ++k) {
        const double* p = pillars.data() + (q * nz + k) * 3;
        const Vec3 pt{p[0], p[1], p[2]};
        const ImageProjection ip = project_point(c, pt);
        const FrustumProjection fp = project_point_to_frustum(c, pt, setup.bins);
        const std::size_t a = q * nz + k;
        image.coords[a * 3 + 0] = ip.u;
        image.coords[a * 3 + 1] = ip.v;
        image.coords[a * 3 + 2] = fp.d_idx;
        image.valid[a] = ip.visible;
        frustum.coords[a * 2 + 0] = (fp.u + 0.5) / stride - 0.5;
        frustum.coords[a * 2 + 1] = fp.d_idx;
        frustum.valid[a] = fp.visible;
      }
    }
    geo.image.push_back(std::move(image));
    geo.frustum.push_back(std::move(frustum));

    const std::size_t cols = setup.frustum_cols(cam), d = setup.bins.count;
    std::vector<std::int64_t> splat(d * cols, -1);
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t col = 0; col < cols; ++col) {
        const double u = static_cast<double>(col) * stride + (stride - 1.0) / 2.0;
        const Vec3 p = unproject(c, u, c.cy, setup.bins.center(b));
        if (const auto cell = grid.cell_of(p.x, p.y)) {
          splat[b * cols + col] = static_cast<std::int64_t>(grid.index(cell->first, cell->second));
        }
      }
    }
    geo.bev_splat.push_back(std::move(splat));
  }
  std::vector<const ReferenceSet*> refs;
  for (const ReferenceSet& r : geo.image) refs.push_back(&r);
  geo.hit_counts = hit_counts(refs);
  geo.hit_mask.resize(q_count);
  for (std::size_t q = 0; q < q_count; ++q) geo.hit_mask[q] = geo.hit_counts[q] > 0;

  geo.bev_self = ReferenceSet(q_count, 1, 2);
  for (std::size_t i = 0; i < grid.x_cells; ++i) {
    for (std::size_t j = 0; j < grid.y_cells; ++j) {
      const std::size_t q = grid.index(i, j);
      geo.bev_self.coords[q * 2 + 0] = static_cast<double>(j);
      geo.bev_self.coords[q * 2 + 1] = static_cast<double>(i);
      geo.bev_self.valid[q] = true;
    }
  }
  return geo;
}

Tensor bev_map(const Tensor& rows, std::size_t x_cells, std::size_t y_cells) {
  if (rows.rank() != 2 || rows.dim(0) != x_cells * y_cells) {
    throw DimensionError("bev_map: expected [X*Y, C], got " + shape_str(rows.shape()));
  }
  const std::size_t c = rows.dim(1), q = rows.dim(0);
  Tensor out({c, x_cells, y_cells});
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t ch = 0; ch < c; ++ch) out[ch * q + r] = rows[r * c + ch];
  return out;
}

Tensor bev_channel_norm(const Tensor& rows, std::size_t x_cells, std::size_t y_cells) {
  if (rows.rank() != 2 || rows.dim(0) != x_cells * y_cells) {
    throw DimensionError("bev_channel_norm: expected [X*Y, C], got " + shape_str(rows.shape()));
  }
  const std::size_t c = rows.dim(1);
  Tensor out({x_cells, y_cells});
  for (std::size_t r = 0; r < rows.dim(0); ++r) {
    double s = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) s += rows[r * c + ch] * rows[r * c + ch];
    out[r] = std::sqrt(s);
  }
  return out;
}

MlpParams make_fusion_mlp(const std::string& name, std::size_t channels) {
  const std::size_t c = channels;
  // Hidden units carry relu(s) and relu(-s) for s = (a + b) / 2; the output
  // layer recombines them as relu(s) - relu(-s) = s.
  Tensor w1({2 * c, 2 * c});
  for (std::size_t k = 0; k < c; ++k) {
    w1[k * 2 * c + k] = 0.5;
    w1[(c + k) * 2 * c + k] = 0.5;
    w1[k * 2 * c + c + k] = -0.5;
    w1[(c + k) * 2 * c + c + k] = -0.5;
  }
  Tensor w2({2 * c, c});
  for (std::size_t k = 0; k < c; ++k) {
    w2[k * c + k] = 1.0;
    w2[(c + k) * c + k] = -1.0;
  }
  MlpParams m;
  m.layers.push_back({Parameter(name + ".w1", std::move(w1)), Parameter(name + ".b1", Tensor({2 * c}), false),
                      Activation::relu});
  m.layers.push_back({Parameter(name + ".w2", std::move(w2)), Parameter(name + ".b2", Tensor({c}), false),
                      Activation::identity});
  return m;
}

EncoderParams EncoderParams::make(const EncoderConfig& cfg, const SensorSetup& setup, std::size_t channels,
                                  Rng& rng) {
  cfg.validate();
  const std::size_t nz = setup.grid.z_anchors.size();
  EncoderParams p;
  p.query = Parameter("bev.query", uniform_init({setup.grid.cells(), channels}, 1, rng));
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string tag = "layer" + std::to_string(l);
    EncoderLayerParams layer;
    layer.ddsca = DeformAttnParams::make(tag + ".ddsca", channels, cfg.n_heads, nz, cfg.n_points, 3, rng);
    layer.rosca = DeformAttnParams::make(tag + ".rosca", channels, cfg.n_heads, nz, cfg.n_points, 3, rng);
    layer.fusion = make_fusion_mlp(tag + ".fusion", channels);
    const std::size_t rc_anchors = cfg.rcsca_view == RadarContextView::frustum ? nz : 1;
    layer.rcsca = DeformAttnParams::make(tag + ".rcsca", channels, cfg.n_heads, rc_anchors, cfg.n_points, 2, rng);
    layer.ln1_g = Parameter(tag + ".ln1_g", Tensor({channels}, 1.0), false);
    layer.ln1_b = Parameter(tag + ".ln1_b", Tensor({channels}), false);
    layer.ln2_g = Parameter(tag + ".ln2_g", Tensor({channels}, 1.0), false);
    layer.ln2_b = Parameter(tag + ".ln2_b", Tensor({channels}), false);
    layer.ln3_g = Parameter(tag + ".ln3_g", Tensor({channels}, 1.0), false);
    layer.ln3_b = Parameter(tag + ".ln3_b", Tensor({channels}), false);
    layer.ffn = MlpParams::make(tag + ".ffn", {channels, cfg.ffn_width, channels},
                                {Activation::relu, Activation::identity}, rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void EncoderParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&query);
  for (EncoderLayerParams& l : layers) {
    l.ddsca.collect(out);
    l.rosca.collect(out);
    l.fusion.collect(out);
    l.rcsca.collect(out);
    for (Parameter* p : {&l.ln1_g, &l.ln1_b, &l.ln2_g, &l.ln2_b, &l.ln3_g, &l.ln3_b}) out.push_back(p);
    l.ffn.collect(out);
  }
}

std::vector<Var> radar_image_occupancy(const ImageStreamOutput& img, const RadarStreamOutput& radar,
                                       const DepthBins& bins, std::size_t stride) {
  if (radar.cameras() != img.cameras()) throw ConfigError("rosca: image and radar camera counts differ");
  std::vector<Var> out;
  for (std::size_t n = 0; n < img.cameras(); ++n) {
    const Shape& ro = radar.occupancy[n].shape();
    if (ro.size() != 3 || ro[0] != bins.count) {
      throw ConfigError("rosca: radar occupancy has " + std::to_string(ro.empty() ? 0 : ro[0]) +
                        " depth bins, projection uses " + std::to_string(bins.count));
    }
    Var r = ops::reshape(radar.occupancy[n], {ro[0], ro[2]});
    out.push_back(ops::column_outer(img.occupancy[n], r, stride));
  }
  return out;
}

namespace {

Var depth_guided(Var queries, const ImageStreamOutput& img, const std::vector<Var>& weights, const ViewGeometry& geo,
                 DeformAttnParams& params) {
  if (img.cameras() != geo.image.size()) throw ConfigError("view transform: camera count mismatch");
  std::vector<ViewInput> views;
  for (std::size_t n = 0; n < img.cameras(); ++n) views.push_back({img.context[n], weights[n], &geo.image[n]});
  return multi_view_deform_attn(queries, views, params, SamplingKernel::factored_3d);
}

Var post_norm(Tape& tape, Var x, Parameter& g, Parameter& b) {
  return ops::layer_norm_rows(x, tape.param(g), tape.param(b));
}

Var ffn_block(Tape& tape, Var x, EncoderLayerParams& layer) {
  return post_norm(tape, ops::add(x, layer.ffn.forward(tape, x)), layer.ln3_g, layer.ln3_b);
}

}  // namespace

Var ddsca(Var queries, const ImageStreamOutput& img, const ViewGeometry& geo, DeformAttnParams& params) {
  return depth_guided(queries, img, img.depth, geo, params);
}

Var rosca(Var queries, const ImageStreamOutput& img, const std::vector<Var>& o_ir, const ViewGeometry& geo,
          DeformAttnParams& params) {
  return depth_guided(queries, img, o_ir, geo, params);
}

Var fuse_bev(std::optional<Var> b_i, std::optional<Var> b_r, Var query, const std::vector<bool>& hit_mask,
             MlpParams& fusion) {
  if (!b_i && !b_r) return query;
  Var fused;
  if (b_i && b_r) {
    fused = fusion.forward(query.tape(), ops::concat_cols(*b_i, *b_r));
  } else {
    fused = b_i ? *b_i : *b_r;
  }
  return ops::select_rows(hit_mask, fused, query);
}

Var rcsca(Var b_ir, const RadarStreamOutput& radar, const ViewGeometry& geo, const SensorSetup& setup,
          DeformAttnParams& params, RadarContextView view) {
  if (radar.cameras() != geo.frustum.size()) throw ConfigError("rcsca: camera count mismatch");
  Tape& tape = b_ir.tape();
  Var attn;
  if (view == RadarContextView::frustum) {
    std::vector<ViewInput> views;
    for (std::size_t n = 0; n < radar.cameras(); ++n) views.push_back({radar.context[n], Var(), &geo.frustum[n]});
    attn = multi_view_deform_attn(b_ir, views, params, SamplingKernel::bilinear_2d);
  } else {
    const std::size_t c = params.channels;
    Var flat;
    std::vector<std::int64_t> targets;
    for (std::size_t n = 0; n < radar.cameras(); ++n) {
      const Shape& s = radar.context[n].shape();
      Var part = ops::reshape(radar.context[n], {s[0], s[1] * s[2]});
      flat = n == 0 ? part : ops::concat_cols(flat, part);
      targets.insert(targets.end(), geo.bev_splat[n].begin(), geo.bev_splat[n].end());
    }
    Var bev = ops::scatter_mean_cols(flat, targets, setup.grid.cells());
    bev = ops::reshape(bev, {c, setup.grid.x_cells, setup.grid.y_cells});
    attn = multi_view_deform_attn(b_ir, {ViewInput{bev, Var(), &geo.bev_self}}, params, SamplingKernel::bilinear_2d);
  }
  (void)tape;
  return ops::add(b_ir, attn);
}

BevState encoder_forward(Tape& tape, const ImageStreamOutput& img, const RadarStreamOutput* radar,
                         const ViewGeometry& geo, const SensorSetup& setup, EncoderParams& params,
                         const EncoderConfig& cfg, std::optional<Var> initial_query) {
  cfg.validate();
  if (params.layers.size() != cfg.n_layers) throw ConfigError("encoder: parameter layer count differs from config");
  if ((cfg.use_rosca || cfg.use_rcsca) && radar == nullptr) {
    throw ConfigError("encoder: configuration needs radar features");
  }
  BevState state;
  state.query = initial_query ? *initial_query : tape.param(params.query);
  state.hit_counts = geo.hit_counts;
  state.hit_mask = geo.hit_mask;
  const std::vector<bool>& hit = geo.hit_mask;

  std::vector<Var> o_ir;
  if (cfg.use_rosca) o_ir = radar_image_occupancy(img, *radar, setup.bins, setup.radar_stride);

  auto rosca_params = [&cfg](EncoderLayerParams& l) -> DeformAttnParams& {
    return cfg.share_attn ? l.ddsca : l.rosca;
  };

  Var x = state.query;
  if (!cfg.fuse_once) {
    for (EncoderLayerParams& layer : params.layers) {
      std::optional<Var> b_i, b_r;
      if (cfg.use_ddsca) b_i = ddsca(x, img, geo, layer.ddsca);
      if (cfg.use_rosca) b_r = rosca(x, img, o_ir, geo, rosca_params(layer));
      const Var b_ir = fuse_bev(b_i, b_r, x, hit, layer.fusion);
      x = post_norm(tape, ops::add(b_ir, ops::mask_rows(x, hit)), layer.ln1_g, layer.ln1_b);
      if (cfg.use_rcsca) {
        x = post_norm(tape, rcsca(x, *radar, geo, setup, layer.rcsca, cfg.rcsca_view), layer.ln2_g, layer.ln2_b);
      }
      x = ffn_block(tape, x, layer);
      state.b_i = b_i.value_or(Var());
      state.b_r = b_r.value_or(Var());
      state.b_ir = b_ir;
    }
  } else {
    Var xi = x, xr = x;
    for (EncoderLayerParams& layer : params.layers) {
      if (cfg.use_ddsca) {
        const Var b = ddsca(xi, img, geo, layer.ddsca);
        xi = post_norm(tape, ops::select_rows(hit, ops::add(b, xi), xi), layer.ln1_g, layer.ln1_b);
        xi = ffn_block(tape, xi, layer);
        state.b_i = b;
      }
      if (cfg.use_rosca) {
        const Var b = rosca(xr, img, o_ir, geo, rosca_params(layer));
        xr = post_norm(tape, ops::select_rows(hit, ops::add(b, xr), xr), layer.ln1_g, layer.ln1_b);
        xr = ffn_block(tape, xr, layer);
        state.b_r = b;
      }
    }
    EncoderLayerParams& last = params.layers.back();
    std::optional<Var> si, sr;
    if (cfg.use_ddsca) si = xi;
    if (cfg.use_rosca) sr = xr;
    state.b_ir = fuse_bev(si, sr, x, hit, last.fusion);
    x = state.b_ir;
    if (cfg.use_rcsca) {
      x = post_norm(tape, rcsca(x, *radar, geo, setup, last.rcsca, cfg.rcsca_view), last.ln2_g, last.ln2_b);
      x = ffn_block(tape, x, last);
    }
  }
  state.b_encoded = x;
  return state;
}

RaySeparation ray_separation_score(const Tensor& features, std::size_t cell_a, std::size_t cell_b) {
  if (features.rank() != 2) throw DimensionError("ray_separation_score: expected [Q, C]");
  const std::size_t q = features.dim(0), c = features.dim(1);
  if (cell_a >= q || cell_b >= q) throw DimensionError("ray_separation_score: cell index out of range");
  const double* a = features.data() + cell_a * c;
  const double* b = features.data() + cell_b * c;
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa == 0.0 || bb == 0.0) return {0.0, true};
  return {1.0 - ab / std::sqrt(aa * bb), false};
}

}  // namespace radbev
