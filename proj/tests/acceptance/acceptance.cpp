// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "radbev/attention/deform_attn.hpp"
#include "radbev/harness/suite.hpp"
#include "radbev/numerics/parallel.hpp"

namespace {

using namespace radbev;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

fs::path g_out = "acceptance_out";

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1. Factored vs materialized depth-weighted attention on random micro instances.
Outcome kernel_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng = Rng::stream(seed, 1);
    const std::size_t heads = 1 + rng.next() % 2;
    const std::size_t c = heads * (1 + rng.next() % 4);
    const std::size_t n = 1 + rng.next() % 2, d = 2 + rng.next() % 7;
    const std::size_t h = 2 + rng.next() % 7, w = 2 + rng.next() % 7;
    const std::size_t q = 1 + rng.next() % 16, a = 1 + rng.next() % 3, pts = 1 + rng.next() % 3;
    DeformAttnParams p = DeformAttnParams::make("m", c, heads, a, pts, 3, rng);
    for (Parameter* par : {&p.offset_w, &p.offset_b}) {
      for (double& v : par->value.values()) v = rng.uniform(-1.5, 1.5);
    }
    for (double& v : p.weight_w.value.values()) v = rng.uniform(-1.0, 1.0);
    std::vector<ReferenceSet> refs;
    for (std::size_t view = 0; view < n; ++view) {
      ReferenceSet ref(q, a, 3);
      for (std::size_t i = 0; i < q * a; ++i) {
        ref.coords[i * 3 + 0] = rng.uniform(-1.0, static_cast<double>(w));
        ref.coords[i * 3 + 1] = rng.uniform(-1.0, static_cast<double>(h));
        ref.coords[i * 3 + 2] = rng.uniform(-1.0, static_cast<double>(d));
        ref.valid[i] = rng.uniform() < 0.8;
      }
      refs.push_back(std::move(ref));
    }
    Tape tape;
    const Var queries = tape.constant(random_tensor({q, c}, rng));
    std::vector<ViewInput> views;
    for (std::size_t view = 0; view < n; ++view) {
      views.push_back({tape.constant(random_tensor({c, h, w}, rng)), tape.constant(random_tensor({d, h, w}, rng, 0, 1)),
                       &refs[view]});
    }
    const Tensor fast = multi_view_deform_attn(queries, views, p, SamplingKernel::factored_3d).value();
    const Tensor slow = multi_view_deform_attn(queries, views, p, SamplingKernel::naive_3d).value();
    for (std::size_t i = 0; i < fast.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
  }
  return {worst < 1e-10, fmt("max |diff| %.3e over 200 instances (tol 1e-10)", worst)};
}

// 2. Finite-difference suite.
Outcome gradient_suite() {
  std::size_t total = 0, failed = 0;
  double worst_elem = 0.0, worst_comp = 0.0;
  std::string first_fail;
  for (std::uint64_t seed : {1u, 7u}) {
    for (const GradCheckEntry& e : run_gradcheck_suite(seed)) {
      ++total;
      double& worst = e.tolerance < kCompositeTolerance ? worst_elem : worst_comp;
      worst = std::max(worst, e.max_rel_error);
      if (!e.passed()) {
        ++failed;
        if (first_fail.empty()) first_fail = e.name;
      }
    }
  }
  std::string detail = fmt("%.0f checks, worst elementary %.2e (tol 1e-6), worst composite %.2e (tol 1e-4)",
                           static_cast<double>(total), worst_elem, worst_comp);
  if (failed) detail += "; failing: " + first_fail;
  return {failed == 0, detail};
}

double row_norm(const Tensor& f, std::size_t q) {
  const std::size_t c = f.dim(1);
  double s = 0.0;
  for (std::size_t k = 0; k < c; ++k) s += f[q * c + k] * f[q * c + k];
  return std::sqrt(s);
}

// 3. Same-ray discrimination with oracle streams and a cell-independent query.
Outcome same_ray_discrimination() {
  RunConfig rc = RunConfig::preset("desk");
  const SensorSetup setup = rc.setup.build();
  const ViewGeometry geo = build_view_geometry(setup);
  std::size_t ok = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    rc.seed = seed;
    const Sample sample = prepare_sample(same_ray_scenario(8.0, 16.0, 0.0, setup, seed), setup);
    double sep[2] = {0, 0}, cosine[2] = {0, 0}, norm_gap_a = 0.0;
    for (int k = 0; k < 2; ++k) {
      rc.encoder = EncoderConfig::preset(k == 0 ? 'A' : 'D');
      Model model = Model::make(rc, setup);
      Tape tape;
      const Var query = shared_initial_query(tape, setup, rc.model.channels, seed);
      const ForwardResult r = forward_model(tape, model, sample, geo, setup, rc.encoder, StreamSource::oracle,
                                            StreamSource::oracle, query);
      const Tensor& f = r.bev.b_encoded.value();
      const auto [near, far] = *sample.probe;
      const RaySeparation s = ray_separation_score(f, near, far);
      sep[k] = s.degenerate ? 0.0 : s.score;
      cosine[k] = 1.0 - sep[k];
      if (k == 0) norm_gap_a = std::abs(row_norm(f, far) - row_norm(f, near)) / row_norm(f, near);
    }
    const bool pass = sep[1] > sep[0] && norm_gap_a < 0.10 && cosine[1] < cosine[0];
    ok += pass;
    detail << (seed ? "; " : "") << "s" << seed << fmt(" sep A %.2e D %.2e normgap %.1e", sep[0], sep[1], norm_gap_a);
  }
  return {ok == 5, fmt("%.0f/5 seeds (need 5/5): ", static_cast<double>(ok)) + detail.str()};
}

double iou_of(const std::vector<AblationRow>& rows, const std::string& label, std::uint64_t seed) {
  for (const AblationRow& r : rows) {
    if (r.variant.label() == label && r.seed == seed) return r.mean_object_iou;
  }
  return std::nan("");
}

// 4. Module ablation ordering on the random benchmark.
Outcome module_ordering() {
  AblationOptions o;
  o.base = RunConfig::preset("desk");
  o.variants = parse_ablation_variants("A,B,C,D");
  const std::vector<AblationRow> rows = run_ablation(o);
  write_text(g_out / "ablation_modules.csv", ablation_csv(o, rows));
  std::size_t ok = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : o.seeds) {
    const double a = iou_of(rows, "A:frustum", seed), b = iou_of(rows, "B:frustum", seed);
    const double c = iou_of(rows, "C:frustum", seed), d = iou_of(rows, "D:frustum", seed);
    const double bc = std::max(b, c);
    const bool pass = a <= bc && bc <= d + 0.01 && d - a >= 0.05;
    ok += pass;
    detail << "; s" << seed << fmt(" A %.3f B %.3f", a, b) << fmt(" C %.3f D %.3f", c, d) << (pass ? "" : " x");
  }
  return {ok >= 4, fmt("%.0f/5 seeds satisfy A<=max(B,C)<=D+0.01 and D-A>=0.05 (need 4/5)", static_cast<double>(ok)) +
                       detail.str()};
}

// 5. Frustum vs BEV radar context on the same-ray benchmark.
Outcome context_view_ordering() {
  AblationOptions o;
  o.base = RunConfig::preset("same_ray");
  o.variants = parse_ablation_variants("C:frustum,C:bev");
  const std::vector<AblationRow> rows = run_ablation(o);
  write_text(g_out / "ablation_context_view.csv", ablation_csv(o, rows));
  std::size_t ok = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : o.seeds) {
    const double f = iou_of(rows, "C:frustum", seed), b = iou_of(rows, "C:bev", seed);
    ok += f >= b;
    detail << "; s" << seed << fmt(" frustum %.3f bev %.3f", f, b);
  }
  return {ok >= 4, fmt("%.0f/5 seeds frustum >= bev (need 4/5)", static_cast<double>(ok)) + detail.str()};
}

// 6. Conservation and contracts on desk scenes.
Outcome conservation() {
  const RunConfig rc = RunConfig::preset("desk");
  const SensorSetup setup = rc.setup.build();
  const ViewGeometry geo = build_view_geometry(setup);
  double worst_sum = 0.0, worst_total = 0.0;
  std::size_t count_errors = 0, passthrough_errors = 0, passthrough_cells = 0;
  for (const SceneSpec& spec : rc.benchmark.scenes(setup)) {
    const Sample s = prepare_sample(spec, setup);
    const RadarPointCloud cloud = accumulate_sweeps(s.frame.sweeps, s.frame.poses);
    for (std::size_t cam = 0; cam < setup.rig.size(); ++cam) {
      const FrustumPillars fp = voxelize_frustum(cloud, setup.rig, cam, setup.bins, setup.radar_stride);
      std::size_t in_pillars = 0;
      for (std::size_t col = 0; col < fp.columns; ++col) {
        for (std::size_t bin = 0; bin < fp.depth_bins; ++bin) in_pillars += fp.points_in(col, bin).size();
      }
      count_errors += (fp.placed() + fp.dropped != cloud.size()) + (in_pillars != fp.placed());
    }
    Model model = Model::make(rc, setup);
    Tape tape;
    const ForwardResult r = forward_model(tape, model, s, geo, setup, rc.encoder);
    for (const Var& dist : r.image.depth) {
      const Tensor& t = dist.value();
      const std::size_t dd = t.dim(0), hw = t.dim(1) * t.dim(2);
      for (std::size_t i = 0; i < hw; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < dd; ++k) sum += t[k * hw + i];
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      }
    }
    worst_total = std::max(worst_total, std::abs(r.parts.total - (r.parts.depth + r.parts.occupancy + r.parts.task)));

    EncoderLayerParams& layer = model.encoder.layers.front();
    const Var query = tape.param(model.encoder.query);
    const std::vector<Var> o_ir = radar_image_occupancy(r.image, r.radar, setup.bins, setup.radar_stride);
    const Var b_i = ddsca(query, r.image, geo, layer.ddsca);
    const Var b_r = rosca(query, r.image, o_ir, geo, layer.rosca);
    const Tensor& fused = fuse_bev(b_i, b_r, query, geo.hit_mask, layer.fusion).value();
    const Tensor& q0 = query.value();
    const std::size_t c = q0.dim(1);
    for (std::size_t q = 0; q < geo.hit_mask.size(); ++q) {
      if (geo.hit_mask[q]) continue;
      ++passthrough_cells;
      for (std::size_t k = 0; k < c; ++k) passthrough_errors += fused[q * c + k] != q0[q * c + k];
    }
  }
  const bool pass = worst_sum <= 1e-12 && count_errors == 0 && passthrough_errors == 0 && worst_total <= 1e-12 &&
                    passthrough_cells > 0;
  std::string detail = fmt("I_D sum err %.1e (tol 1e-12), voxel count mismatches %.0f, ", worst_sum,
                           static_cast<double>(count_errors));
  detail += fmt("passthrough mismatches %.0f over %.0f miss cells, loss sum err %.1e (tol 1e-12)",
                static_cast<double>(passthrough_errors), static_cast<double>(passthrough_cells), worst_total);
  return {pass, detail};
}

// 7. Byte-identical train and demo artifacts across runs and thread counts.
Outcome determinism() {
  RunConfig rc = RunConfig::preset("desk");
  rc.steps = 20;
  rc.eval_every = 10;
  const std::size_t before = num_threads();
  const std::vector<std::size_t> threads{1, 1, 4};
  std::vector<std::string> train_blobs, demo_blobs;
  for (std::size_t k = 0; k < threads.size(); ++k) {
    set_num_threads(threads[k]);
    const fs::path tdir = g_out / ("determinism/train" + std::to_string(k));
    const fs::path ddir = g_out / ("determinism/demo" + std::to_string(k));
    fs::remove_all(tdir);
    fs::remove_all(ddir);
    rc.out_dir = tdir.string();
    train(rc);
    std::string blob;
    for (const char* f : {"metrics.csv", "summary.json", "checkpoint.bin"}) blob += slurp(tdir / f) + '\x1f';
    train_blobs.push_back(blob);

    DemoOptions d;
    d.config = RunConfig::preset("same_ray");
    d.out_dir = ddir.string();
    const DemoResult r = run_demo(d);
    blob.clear();
    for (const std::string& f : r.files) blob += slurp(ddir / f) + '\x1f';
    blob += slurp(ddir / "metrics.json");
    demo_blobs.push_back(blob);
  }
  set_num_threads(before);
  std::size_t mismatches = 0;
  for (std::size_t k = 1; k < threads.size(); ++k) {
    mismatches += train_blobs[k] != train_blobs[0];
    mismatches += demo_blobs[k] != demo_blobs[0];
  }
  return {mismatches == 0, fmt("train (20 steps) and demo outputs over runs at 1, 1, 4 threads: %.0f mismatches, "
                               "%.0f train bytes compared",
                               static_cast<double>(mismatches), static_cast<double>(train_blobs[0].size()))};
}

// 8. Peak memory growth of the naive kernel vs the factored one.
Outcome complexity() {
  BenchOptions o;
  o.repeats = 1;
  const std::vector<BenchRow> rows = run_bench(o);
  write_text(g_out / "bench.csv", bench_csv(rows));
  double fmin = 1e300, fmax = 0.0;
  for (const BenchRow& r : rows) {
    fmin = std::min(fmin, static_cast<double>(r.factored_peak_bytes));
    fmax = std::max(fmax, static_cast<double>(r.factored_peak_bytes));
  }
  // Least-squares fit of naive peak bytes against D.
  const double n = static_cast<double>(rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const BenchRow& r : rows) {
    const double x = static_cast<double>(r.depth_bins), y = static_cast<double>(r.naive_peak_bytes);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  const double slope = cov / vx, r2 = cov * cov / (vx * vy);
  const double flat = fmax / fmin - 1.0;
  const double growth = static_cast<double>(rows.back().naive_peak_bytes) / static_cast<double>(rows.front().naive_peak_bytes);
  const bool pass = flat <= 0.05 && slope > 0.0 && r2 >= 0.99 && growth > 2.0;
  std::string detail = fmt("factored peak spread %.2f%% (tol 5%%); naive linear fit R^2 %.5f, slope %.0f B/bin", 100.0 * flat,
                           r2, slope);
  detail += fmt(", naive peak x%.2f from D=8 to D=64", growth);
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_out = argv[1];
  fs::create_directories(g_out);
  const std::vector<Criterion> criteria{
      {1, "kernel oracle equivalence", 10, kernel_equivalence},
      {2, "gradient suite", 60, gradient_suite},
      {3, "same-ray discrimination", 120, same_ray_discrimination},
      {4, "module ablation ordering", 900, module_ordering},
      {5, "radar context view ordering", 600, context_view_ordering},
      {6, "conservation and contracts", 5, conservation},
      {7, "determinism", 300, determinism},
      {8, "complexity property", 120, complexity},
  };
  std::vector<int> only;
  for (int i = 2; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %d %s: %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
