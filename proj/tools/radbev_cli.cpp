// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "radbev/errors.hpp"
#include "radbev/harness/suite.hpp"
#include "radbev/numerics/parallel.hpp"

namespace {

using namespace radbev;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Run configuration JSON");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--threads", c.threads, "Worker threads for attention kernels (0 = keep default)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig::preset("desk") : load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.threads > 0) set_num_threads(c.threads);
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ResourceError("cannot write " + path.string());
  os << text;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-radar BEV view transformation toolkit"};
  app.require_subcommand(1);

  Common demo_c, grad_c, train_c, ablate_c, bench_c;

  CLI::App* demo = app.add_subcommand("demo", "Dump staged BEV feature maps of one scene");
  add_common(demo, demo_c);
  std::string radar_csv;
  bool learned = false;
  bool learned_query = false;
  demo->add_option("--radar-csv", radar_csv, "Accumulated radar points replacing the simulated cloud");
  demo->add_flag("--learned-streams", learned, "Use the (untrained) learned image and radar encoders");
  demo->add_flag("--learned-query", learned_query, "Use the learned per-cell query grid");

  CLI::App* grad = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  add_common(grad, grad_c);

  CLI::App* tr = app.add_subcommand("train", "Train on the configured benchmark");
  add_common(tr, train_c);
  std::optional<std::size_t> train_steps;
  tr->add_option("--steps", train_steps, "Training steps");

  CLI::App* ab = app.add_subcommand("ablate", "Train every encoder variant on every seed");
  add_common(ab, ablate_c);
  std::optional<std::size_t> ablate_steps;
  std::string variants, seeds = "0,1,2,3,4";
  ab->add_option("--steps", ablate_steps, "Training steps per run");
  ab->add_option("--variants", variants, "Comma list such as A,B,C,D,C:bev");
  ab->add_option("--seeds", seeds, "Comma list of seeds");

  CLI::App* bench = app.add_subcommand("bench", "Time and memory of factored vs naive depth-weighted attention");
  add_common(bench, bench_c);
  std::string depths = "8,16,32,64";
  std::size_t repeats = 3;
  bench->add_option("--depths", depths, "Comma list of depth bin counts");
  bench->add_option("--repeats", repeats, "Timed repeats per kernel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (demo->parsed()) {
      DemoOptions o;
      o.config = resolve(demo_c);
      o.out_dir = demo_c.out.empty() ? "demo_out" : demo_c.out;
      o.radar_csv = radar_csv;
      o.oracle_streams = !learned;
      o.shared_query = !learned_query;
      const DemoResult r = run_demo(o);
      std::printf("demo: wrote %zu files to %s; hit cells %zu; ray separation %.6g%s\n", r.files.size(),
                  o.out_dir.c_str(), r.hit_cells, r.ray_sep, r.ray_sep_degenerate ? " (degenerate)" : "");
      return 0;
    }
    if (grad->parsed()) {
      const RunConfig cfg = resolve(grad_c);
      const std::vector<GradCheckEntry> entries = run_gradcheck_suite(cfg.seed);
      bool ok = true;
      std::ostringstream report;
      report << "op,max_rel_error,tolerance,status\n";
      for (const GradCheckEntry& e : entries) {
        std::printf("%-34s max rel err %.3e (tol %.0e) %s\n", e.name.c_str(), e.max_rel_error, e.tolerance,
                    e.passed() ? "PASS" : "FAIL");
        report << e.name << ',' << e.max_rel_error << ',' << e.tolerance << ',' << (e.passed() ? "pass" : "fail")
               << '\n';
        ok = ok && e.passed();
      }
      if (!grad_c.out.empty()) write_file(std::filesystem::path(grad_c.out) / "gradcheck.csv", report.str());
      std::printf("gradcheck: %s\n", ok ? "all passed" : "FAILED");
      return ok ? 0 : 1;
    }
    if (tr->parsed()) {
      RunConfig cfg = resolve(train_c);
      if (train_steps) cfg.steps = *train_steps;
      if (cfg.out_dir.empty()) cfg.out_dir = "train_out";
      const TrainResult r = train(cfg);
      const MetricsRow& last = r.rows.back();
      std::printf("train: %zu steps, final loss %.6g, eval mean object IoU %.4f, ray separation %.6g -> %s\n",
                  r.rows.size(), last.loss.total, r.eval_iou.mean_iou(), r.ray_sep, cfg.out_dir.c_str());
      return 0;
    }
    if (ab->parsed()) {
      AblationOptions o;
      o.base = resolve(ablate_c);
      if (ablate_steps) o.base.steps = *ablate_steps;
      o.seeds = parse_seeds(seeds);
      if (!variants.empty()) o.variants = parse_ablation_variants(variants);
      const std::string out_dir = o.base.out_dir.empty() ? "ablate_out" : o.base.out_dir;
      o.base.out_dir.clear();
      const std::vector<AblationRow> rows = run_ablation(o);
      const std::string csv = ablation_csv(o, rows);
      write_file(std::filesystem::path(out_dir) / "ablation.csv", csv);
      std::fputs(csv.c_str(), stdout);
      return 0;
    }
    if (bench->parsed()) {
      const RunConfig cfg = resolve(bench_c);
      BenchOptions o;
      o.seed = cfg.seed;
      o.repeats = repeats;
      o.depth_bins.clear();
      for (std::uint64_t d : parse_seeds(depths)) o.depth_bins.push_back(static_cast<std::size_t>(d));
      const std::string csv = bench_csv(run_bench(o));
      if (!bench_c.out.empty()) write_file(std::filesystem::path(bench_c.out) / "bench.csv", csv);
      std::fputs(csv.c_str(), stdout);
      return 0;
    }
  } catch (const radbev::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
