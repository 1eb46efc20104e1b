// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/harness/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "radbev/errors.hpp"
#include "radbev/numerics/grad_check.hpp"
#include "radbev/numerics/image_io.hpp"
#include "radbev/numerics/memory.hpp"
#include "radbev/numerics/ops.hpp"

namespace radbev {

namespace {

using nlohmann::json;
using OpFn = std::function<Var(const std::vector<Var>&)>;

constexpr std::uint64_t kQueryStream = 12;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Max relative FD error of <op(inputs), probe> with respect to every input.
double check_op(const OpFn& op, std::vector<Tensor> inputs, Rng& rng, std::size_t max_elements = 0) {
  std::vector<Tensor*> ptrs;
  for (Tensor& t : inputs) ptrs.push_back(&t);
  Tensor probe;
  {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor& t : inputs) vars.push_back(tape.constant(t));
    probe = random_tensor(op(vars).shape(), rng);
  }
  GradCheckOptions opt;
  opt.max_elements_per_tensor = max_elements;
  auto f = [&](Tape&, const std::vector<Var>& in) { return ops::dot_const(op(in), probe); };
  return grad_check_report(f, ptrs, opt).max_rel_error;
}

// Values bounded away from zero so ReLU kinks and max ties stay out of the
// finite-difference stencil.
Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return t;
}

// Distinct values per segment so the max is unique.
Tensor distinct_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[r * cols + c] = static_cast<double>(r) * 0.37 + rng.uniform(0.0, 0.1);
  }
  return t;
}

ReferenceSet random_refs(std::size_t q, std::size_t a, std::size_t dims, std::size_t h, std::size_t w,
                         std::size_t d, Rng& rng) {
  ReferenceSet ref(q, a, dims);
  for (std::size_t i = 0; i < q * a; ++i) {
    ref.coords[i * dims + 0] = rng.uniform(0.2, static_cast<double>(w) - 1.2);
    ref.coords[i * dims + 1] = rng.uniform(0.2, static_cast<double>(h) - 1.2);
    if (dims == 3) ref.coords[i * dims + 2] = rng.uniform(0.2, static_cast<double>(d) - 1.2);
    ref.valid[i] = rng.uniform() < 0.85;
  }
  return ref;
}

void perturb_attention(DeformAttnParams& p, Rng& rng) {
  for (double& v : p.offset_w.value.values()) v = rng.uniform(-0.2, 0.2);
  for (double& v : p.offset_b.value.values()) v = rng.uniform(-0.3, 0.3);
  for (double& v : p.weight_w.value.values()) v = rng.uniform(-0.5, 0.5);
}

// Moves zero-initialized biases and norm affines off their init values so
// ReLU inputs of empty cells do not sit exactly on the kink.
void jitter_undecayed(const std::vector<Parameter*>& params, Rng& rng) {
  for (Parameter* p : params) {
    if (p->decay) continue;
    for (double& v : p->value.values()) v += rng.uniform(-0.1, 0.1);
  }
}

double param_check(const ParamFn& f, const std::vector<Parameter*>& params, std::size_t max_elements) {
  GradCheckOptions opt;
  opt.max_elements_per_tensor = max_elements;
  return grad_check_params(f, params, opt).max_rel_error;
}

void add(std::vector<GradCheckEntry>& out, std::string name, double err, double tol) {
  out.push_back({std::move(name), err, tol});
}

Tensor centered_norm_map(const Tensor& rows, std::size_t x, std::size_t y) {
  const std::size_t q = rows.dim(0), c = rows.dim(1);
  std::vector<double> mean(c, 0.0);
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t k = 0; k < c; ++k) mean[k] += rows[r * c + k] / static_cast<double>(q);
  Tensor centered = rows;
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t k = 0; k < c; ++k) centered[r * c + k] -= mean[k];
  return bev_channel_norm(centered, x, y);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ResourceError("cannot write " + path.string());
  os << text;
}

}  // namespace

RunConfig micro_run_config() {
  RunConfig c;
  c.name = "micro";
  c.setup.image_height = 8;
  c.setup.image_width = 16;
  c.setup.bev_cells = 6;
  c.setup.bev_extent = 12.0;
  c.setup.depth_bins = 8;
  c.setup.d_max = 20.0;
  c.model.channels = 8;
  c.model.image_trunk = 4;
  c.model.radar_width = 4;
  c.model.seg_hidden = 4;
  c.encoder.n_layers = 1;
  c.encoder.ffn_width = 8;
  c.benchmark.n_scenes = 1;
  c.benchmark.objects = 2;
  return c;
}

std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed) {
  std::vector<GradCheckEntry> out;
  Rng rng = Rng::stream(seed, 0);
  const double te = kElementaryTolerance, tc = kCompositeTolerance;

  // Elementary ops.
  add(out, "add", check_op([](const auto& v) { return ops::add(v[0], v[1]); },
                           {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}, rng), te);
  add(out, "sub", check_op([](const auto& v) { return ops::sub(v[0], v[1]); },
                           {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}, rng), te);
  add(out, "mul", check_op([](const auto& v) { return ops::mul(v[0], v[1]); },
                           {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}, rng), te);
  add(out, "scale", check_op([](const auto& v) { return ops::scale(v[0], -1.7); }, {random_tensor({5}, rng)}, rng),
      te);
  add(out, "relu", check_op([](const auto& v) { return ops::relu(v[0]); }, {away_from_zero({4, 5}, rng)}, rng), te);
  add(out, "sigmoid", check_op([](const auto& v) { return ops::sigmoid(v[0]); }, {random_tensor({4, 5}, rng, -3, 3)},
                               rng), te);
  add(out, "matmul", check_op([](const auto& v) { return ops::matmul(v[0], v[1]); },
                              {random_tensor({4, 6}, rng), random_tensor({6, 3}, rng)}, rng), te);
  add(out, "transpose", check_op([](const auto& v) { return ops::transpose(v[0]); }, {random_tensor({3, 5}, rng)},
                                 rng), te);
  add(out, "add_row_bias", check_op([](const auto& v) { return ops::add_row_bias(v[0], v[1]); },
                                    {random_tensor({4, 3}, rng), random_tensor({3}, rng)}, rng), te);
  add(out, "add_col_bias", check_op([](const auto& v) { return ops::add_col_bias(v[0], v[1]); },
                                    {random_tensor({3, 4}, rng), random_tensor({3}, rng)}, rng), te);
  add(out, "reshape", check_op([](const auto& v) { return ops::reshape(v[0], {6, 2}); }, {random_tensor({3, 4}, rng)},
                               rng), te);
  add(out, "concat_cols", check_op([](const auto& v) { return ops::concat_cols(v[0], v[1]); },
                                   {random_tensor({3, 2}, rng), random_tensor({3, 4}, rng)}, rng), te);
  add(out, "sum", check_op([](const auto& v) { return ops::sum(v[0]); }, {random_tensor({3, 4}, rng)}, rng), te);
  add(out, "mean", check_op([](const auto& v) { return ops::mean(v[0]); }, {random_tensor({3, 4}, rng)}, rng), te);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    add(out, "softmax_axis" + std::to_string(axis),
        check_op([axis](const auto& v) { return ops::softmax(v[0], axis); }, {random_tensor({3, 4, 5}, rng, -2, 2)},
                 rng),
        te);
  }
  add(out, "conv2d_lite", check_op([](const auto& v) { return ops::conv2d_lite(v[0], v[1]); },
                                   {random_tensor({2, 5, 6}, rng), random_tensor({3, 2, 3, 3}, rng)}, rng), te);
  {
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      Tensor uv({2}, {rng.uniform(-0.8, 5.8) + 0.01, rng.uniform(-0.8, 4.8) + 0.01});
      worst = std::max(worst, check_op([](const auto& v) { return ops::bilinear_sample(v[0], v[1]); },
                                       {random_tensor({3, 5, 6}, rng), uv}, rng));
    }
    add(out, "bilinear_sample", worst, te);
  }
  add(out, "layer_norm_rows", check_op([](const auto& v) { return ops::layer_norm_rows(v[0], v[1], v[2]); },
                                       {random_tensor({4, 6}, rng), random_tensor({6}, rng), random_tensor({6}, rng)},
                                       rng), te);
  add(out, "scale_rows", check_op([](const auto& v) { return ops::scale_rows(v[0], {0.5, -2.0, 1.0}); },
                                  {random_tensor({3, 4}, rng)}, rng), te);
  add(out, "select_rows", check_op([](const auto& v) { return ops::select_rows({true, false, true}, v[0], v[1]); },
                                   {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}, rng), te);
  add(out, "mask_rows", check_op([](const auto& v) { return ops::mask_rows(v[0], {false, true, true}); },
                                 {random_tensor({3, 4}, rng)}, rng), te);
  add(out, "segment_max",
      check_op([](const auto& v) { return ops::segment_max(v[0], {0, 0, 2, 2, 2, 3}, 5); }, {distinct_rows(6, 3, rng)},
               rng),
      te);
  add(out, "scatter_mean_cols",
      check_op([](const auto& v) { return ops::scatter_mean_cols(v[0], {1, -1, 1, 0, 3}, 4); },
               {random_tensor({3, 5}, rng)}, rng),
      te);
  add(out, "column_outer", check_op([](const auto& v) { return ops::column_outer(v[0], v[1], 2); },
                                    {random_tensor({1, 3, 6}, rng), random_tensor({4, 3}, rng)}, rng), te);
  add(out, "cross_entropy_cols",
      check_op([](const auto& v) { return ops::cross_entropy_cols(v[0], {0, 2, 1, 2}); }, {random_tensor({3, 4}, rng)},
               rng),
      te);

  // Losses.
  {
    DepthBins bins;
    bins.count = 6;
    bins.d_max = 12.0;
    Tensor depth_image({3, 4});
    for (std::size_t i = 0; i < depth_image.size(); ++i) depth_image[i] = i % 5 == 0 ? 0.0 : rng.uniform(1.0, 11.0);
    add(out, "depth_loss",
        check_op(
            [&](const auto& v) {
              return depth_loss(v[0].tape(), {ops::softmax(v[0], 0)}, {depth_image}, bins);
            },
            {random_tensor({6, 3, 4}, rng)}, rng),
        te);
    Tensor heat({3, 4});
    for (std::size_t i = 0; i < heat.size(); ++i) heat[i] = i == 5 ? 1.0 : rng.uniform(0.0, 0.9);
    add(out, "occupancy_loss",
        check_op([&](const auto& v) { return occupancy_loss(v[0].tape(), {ops::sigmoid(v[0])}, {heat}); },
                 {random_tensor({1, 3, 4}, rng, -2, 2)}, rng),
        te);
  }

  // Attention kernels.
  {
    const std::size_t c = 4, h = 5, w = 6, d = 4, q = 5;
    Rng init = Rng::stream(seed, 1);
    DeformAttnParams p2 = DeformAttnParams::make("k2", c, 2, 2, 2, 2, init);
    DeformAttnParams p3 = DeformAttnParams::make("k3", c, 2, 2, 2, 3, init);
    perturb_attention(p2, init);
    perturb_attention(p3, init);
    const ReferenceSet r2 = random_refs(q, 2, 2, h, w, d, rng), r3 = random_refs(q, 2, 3, h, w, d, rng);
    add(out, "deform_attn_2d",
        check_op([&](const auto& v) { return deform_attn_2d(v[0], v[1], r2, p2); },
                 {random_tensor({c, h, w}, rng), random_tensor({q, c}, rng)}, rng),
        tc);
    add(out, "deform_attn_3d_factored",
        check_op([&](const auto& v) { return deform_attn_3d_factored(v[0], v[1], v[2], r3, p3); },
                 {random_tensor({c, h, w}, rng), random_tensor({d, h, w}, rng, 0, 1), random_tensor({q, c}, rng)},
                 rng),
        tc);
    add(out, "deform_attn_3d_naive",
        check_op([&](const auto& v) { return deform_attn_3d_naive(v[0], v[1], v[2], r3, p3); },
                 {random_tensor({c, h, w}, rng), random_tensor({d, h, w}, rng, 0, 1), random_tensor({q, c}, rng)},
                 rng),
        tc);
    const Tensor ctx = random_tensor({c, h, w}, rng), dw = random_tensor({d, h, w}, rng, 0, 1);
    const Tensor qs = random_tensor({q, c}, rng);
    Tensor probe = random_tensor({q, c}, rng);
    std::vector<Parameter*> ps;
    p3.collect(ps);
    add(out, "deform_attn_3d_factored_params",
        param_check(
            [&](Tape& t) {
              return ops::dot_const(deform_attn_3d_factored(t.constant(ctx), t.constant(dw), t.constant(qs), r3, p3),
                                    probe);
            },
            ps, 0),
        tc);
  }

  // Micro model: stream encoders, view transform and losses.
  const RunConfig micro = micro_run_config();
  const SensorSetup setup = micro.setup.build();
  const ViewGeometry geo = build_view_geometry(setup);
  const Sample sample = prepare_sample(random_scene(seed, 2, setup), setup);
  {
    Rng init = Rng::stream(seed, 2);
    MlpParams mlp = MlpParams::make("mlp", {5, 6, 3}, {Activation::relu, Activation::identity}, init);
    std::vector<Parameter*> ps;
    mlp.collect(ps);
    const Tensor x = random_tensor({4, 5}, rng);
    const Tensor probe = random_tensor({4, 3}, rng);
    add(out, "mlp", param_check([&](Tape& t) { return ops::dot_const(mlp.forward(t, t.constant(x)), probe); }, ps, 0),
        tc);
  }
  {
    Rng init = Rng::stream(seed, 3);
    ImageEncoderParams ip = ImageEncoderParams::make(micro.model.channels, micro.model.image_trunk,
                                                     setup.bins.count, init);
    std::vector<Parameter*> ps;
    ip.collect(ps);
    jitter_undecayed(ps, init);
    add(out, "encode_images",
        param_check(
            [&](Tape& t) {
              const ImageStreamOutput o = encode_images(t, sample.frame.images, ip);
              Var s = ops::add(depth_loss(t, o.depth, sample.frame.gt.depth_image, setup.bins),
                               occupancy_loss(t, o.occupancy, sample.frame.gt.heatmap));
              for (const Var& c : o.context) s = ops::add(s, ops::scale(ops::mean(ops::mul(c, c)), 0.1));
              return s;
            },
            ps, 6),
        tc);
  }
  {
    Rng init = Rng::stream(seed, 4);
    RadarEncoderParams rp = RadarEncoderParams::make(micro.model.channels, micro.model.radar_width, init);
    std::vector<Parameter*> ps;
    rp.collect(ps);
    jitter_undecayed(ps, init);
    add(out, "encode_pillars",
        param_check(
            [&](Tape& t) {
              const RadarStreamOutput o = encode_pillars(t, sample.pillars, rp);
              Var s = t.constant(Tensor::scalar(0.0));
              for (std::size_t n = 0; n < o.cameras(); ++n) {
                s = ops::add(s, ops::mean(ops::mul(o.context[n], o.context[n])));
                s = ops::add(s, ops::mean(o.occupancy[n]));
              }
              return s;
            },
            ps, 6),
        tc);
  }
  for (char name : {'A', 'B', 'C', 'D'}) {
    RunConfig cfg = micro;
    cfg.seed = seed;
    cfg.encoder = with_variant(cfg.encoder, {name, RadarContextView::frustum});
    Model model = Model::make(cfg, setup);
    Rng perturb = Rng::stream(seed, 5);
    for (EncoderLayerParams& l : model.encoder.layers) {
      perturb_attention(l.ddsca, perturb);
      perturb_attention(l.rosca, perturb);
      perturb_attention(l.rcsca, perturb);
    }
    std::vector<Parameter*> ps;
    model.collect(ps);
    jitter_undecayed(ps, perturb);
    add(out, std::string("model_config_") + name,
        param_check(
            [&](Tape& t) { return forward_model(t, model, sample, geo, setup, cfg.encoder).loss; }, ps, 4),
        tc);
  }
  return out;
}

std::vector<BenchRow> run_bench(const BenchOptions& o) {
  std::vector<BenchRow> rows;
  Rng rng = Rng::stream(o.seed, 0);
  DeformAttnParams params = DeformAttnParams::make("bench", o.channels, o.heads, o.anchors, o.points, 3, rng);
  perturb_attention(params, rng);
  const Tensor context = random_tensor({o.channels, o.height, o.width}, rng);
  const Tensor queries = random_tensor({o.queries, o.channels}, rng);
  for (std::size_t d : o.depth_bins) {
    const Tensor depth = random_tensor({d, o.height, o.width}, rng, 0.0, 1.0);
    const ReferenceSet ref = random_refs(o.queries, o.anchors, 3, o.height, o.width, d, rng);
    BenchRow row;
    row.depth_bins = d;
    Tensor factored_out, naive_out;
    for (int kernel = 0; kernel < 2; ++kernel) {
      double best_ms = 0.0;
      std::size_t peak = 0;
      for (std::size_t r = 0; r < std::max<std::size_t>(o.repeats, 1); ++r) {
        Tape tape;
        const Var ctx = tape.constant(context), dw = tape.constant(depth), qs = tape.constant(queries);
        MemoryTracker::reset_peak();
        const std::size_t base = MemoryTracker::current();
        const auto t0 = std::chrono::steady_clock::now();
        const Var y = kernel == 0 ? deform_attn_3d_factored(ctx, dw, qs, ref, params)
                                  : deform_attn_3d_naive(ctx, dw, qs, ref, params);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        peak = std::max(peak, MemoryTracker::peak() - base);
        best_ms = r == 0 ? ms : std::min(best_ms, ms);
        (kernel == 0 ? factored_out : naive_out) = y.value();
      }
      if (kernel == 0) {
        row.factored_ms = best_ms;
        row.factored_peak_bytes = peak;
      } else {
        row.naive_ms = best_ms;
        row.naive_peak_bytes = peak;
      }
    }
    for (std::size_t i = 0; i < factored_out.size(); ++i) {
      row.max_abs_diff = std::max(row.max_abs_diff, std::abs(factored_out[i] - naive_out[i]));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "depth_bins,factored_ms,naive_ms,factored_peak_bytes,naive_peak_bytes,max_abs_diff\n";
  for (const BenchRow& r : rows) {
    os << r.depth_bins << ',' << fmt(r.factored_ms) << ',' << fmt(r.naive_ms) << ',' << r.factored_peak_bytes << ','
       << r.naive_peak_bytes << ',' << fmt(r.max_abs_diff) << '\n';
  }
  return os.str();
}

Var shared_initial_query(Tape& tape, const SensorSetup& setup, std::size_t channels, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, kQueryStream);
  std::vector<double> row(channels);
  for (double& v : row) v = rng.uniform(-1.0, 1.0);
  Tensor q({setup.grid.cells(), channels});
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = row[i % channels];
  return tape.constant(std::move(q));
}

DemoResult run_demo(const DemoOptions& o) {
  const RunConfig& cfg = o.config;
  cfg.validate();
  if (o.out_dir.empty()) throw ConfigError("demo: output directory required");
  const SensorSetup setup = cfg.setup.build();
  const ViewGeometry geo = build_view_geometry(setup);
  const SceneSpec spec = cfg.benchmark.scenes(setup).front();
  const Sample sample = o.radar_csv.empty() ? prepare_sample(spec, setup)
                                            : prepare_sample_from_cloud(spec, setup, load_radar_csv(o.radar_csv));
  Model model = Model::make(cfg, setup);
  Tape tape;
  std::optional<Var> query;
  if (o.shared_query) query = shared_initial_query(tape, setup, cfg.model.channels, cfg.seed);
  const StreamSource src = o.oracle_streams ? StreamSource::oracle : StreamSource::learned;
  const ForwardResult r = forward_model(tape, model, sample, geo, setup, cfg.encoder, src, src, query);

  DemoResult result;
  for (std::size_t q = 0; q < setup.grid.cells(); ++q) result.hit_cells += r.bev.hit_mask[q] ? 1 : 0;
  const std::filesystem::path out = o.out_dir;
  std::filesystem::create_directories(out);
  const std::size_t x = setup.grid.x_cells, y = setup.grid.y_cells;
  const std::pair<const char*, Var> stages[] = {
      {"b_i.pgm", r.bev.b_i}, {"b_r.pgm", r.bev.b_r}, {"b_ir.pgm", r.bev.b_ir}, {"b_encoded.pgm", r.bev.b_encoded}};
  for (const auto& [file, var] : stages) {
    if (!var.valid()) continue;
    write_pgm((out / file).string(), to_gray_autoscale(centered_norm_map(var.value(), x, y)));
    result.files.push_back(file);
  }
  write_pgm((out / "gt_bev.pgm").string(), to_gray(sample.frame.gt.bev_class.reshape({x, y}), 0.0, kNumClasses - 1));
  result.files.push_back("gt_bev.pgm");

  json m;
  m["scene_seed"] = spec.seed;
  m["config"] = json::parse(run_config_to_json(cfg));
  m["config"].erase("out_dir");
  m["hit_cells"] = result.hit_cells;
  m["loss"] = {{"total", fmt(r.parts.total)},
               {"depth", fmt(r.parts.depth)},
               {"occupancy", fmt(r.parts.occupancy)},
               {"task", fmt(r.parts.task)}};
  if (sample.probe) {
    const RaySeparation sep = ray_separation_score(r.bev.b_encoded.value(), sample.probe->first, sample.probe->second);
    result.ray_sep = sep.score;
    result.ray_sep_degenerate = sep.degenerate;
    m["probe_cells"] = {sample.probe->first, sample.probe->second};
    m["ray_sep"] = fmt(sep.score);
    m["ray_sep_degenerate"] = sep.degenerate;
  }
  m["files"] = result.files;
  write_text(out / "metrics.json", m.dump(2) + "\n");
  result.files.push_back("metrics.json");
  return result;
}

std::string AblationVariant::label() const {
  return std::string(1, config) + (view == RadarContextView::frustum ? ":frustum" : ":bev");
}

std::vector<AblationVariant> default_ablation_variants() {
  return {{'A', RadarContextView::frustum}, {'B', RadarContextView::frustum}, {'C', RadarContextView::frustum},
          {'D', RadarContextView::frustum}, {'C', RadarContextView::bev},      {'D', RadarContextView::bev}};
}

std::vector<AblationVariant> parse_ablation_variants(const std::string& list) {
  std::vector<AblationVariant> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    AblationVariant v;
    if (item[0] < 'A' || item[0] > 'D') throw ConfigError("ablate: unknown config '" + item + "'");
    v.config = item[0];
    const std::string view = item.size() > 1 ? item.substr(1) : ":frustum";
    if (view == ":frustum") {
      v.view = RadarContextView::frustum;
    } else if (view == ":bev") {
      v.view = RadarContextView::bev;
    } else {
      throw ConfigError("ablate: unknown variant '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("ablate: empty variant list");
  return out;
}

EncoderConfig with_variant(EncoderConfig base, const AblationVariant& v) {
  const EncoderConfig p = EncoderConfig::preset(v.config);
  base.use_ddsca = p.use_ddsca;
  base.use_rosca = p.use_rosca;
  base.use_rcsca = p.use_rcsca;
  base.rcsca_view = v.view;
  return base;
}

std::vector<AblationRow> run_ablation(const AblationOptions& o) {
  std::vector<AblationRow> rows;
  for (const AblationVariant& v : o.variants) {
    for (std::uint64_t seed : o.seeds) {
      RunConfig cfg = o.base;
      cfg.encoder = with_variant(cfg.encoder, v);
      cfg.seed = seed;
      if (!o.base.out_dir.empty()) {
        std::string tag = v.label();
        std::replace(tag.begin(), tag.end(), ':', '_');
        cfg.out_dir = (std::filesystem::path(o.base.out_dir) / (tag + "_seed" + std::to_string(seed))).string();
      }
      const TrainResult r = train(cfg);
      rows.push_back({v, seed, r.eval_iou.mean_iou(), r.eval_iou.iou(), r.ray_sep});
    }
  }
  return rows;
}

std::string ablation_csv(const AblationOptions& o, const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "# seeds=";
  for (std::size_t i = 0; i < o.seeds.size(); ++i) os << (i ? ";" : "") << o.seeds[i];
  os << " data_seed=" << o.base.benchmark.data_seed << " benchmark=" << o.base.benchmark.kind
     << " scenes=" << o.base.benchmark.n_scenes << " steps=" << o.base.steps << '\n';
  os << "config,view,seed,mean_object_iou,iou_free,iou_vehicle,iou_pedestrian,ray_sep\n";
  for (const AblationRow& r : rows) {
    os << r.variant.config << ',' << (r.variant.view == RadarContextView::frustum ? "frustum" : "bev") << ','
       << r.seed << ',' << fmt(r.mean_object_iou);
    for (double v : r.iou) os << ',' << fmt(v);
    os << ',' << fmt(r.ray_sep) << '\n';
  }
  return os.str();
}

}  // namespace radbev
