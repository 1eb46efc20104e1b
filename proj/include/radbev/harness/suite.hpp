// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radbev/harness/train.hpp"

namespace radbev {

// ---- Finite-difference suite. ------------------------------------------

inline constexpr double kElementaryTolerance = 1e-6;
inline constexpr double kCompositeTolerance = 1e-4;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

// Every differentiable op, the attention kernels, stream encoders, losses
// and the full config-D model on a micro scene.
std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed);

// Sensor setup and model sizes small enough for exhaustive FD checks.
RunConfig micro_run_config();

// ---- Kernel benchmark. --------------------------------------------------

struct BenchOptions {
  std::vector<std::size_t> depth_bins{8, 16, 32, 64};
  std::size_t channels = 16, height = 48, width = 96, queries = 256;
  std::size_t heads = 2, anchors = 4, points = 4;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::size_t depth_bins = 0;
  double factored_ms = 0.0, naive_ms = 0.0;
  std::size_t factored_peak_bytes = 0, naive_peak_bytes = 0;
  double max_abs_diff = 0.0;
};

// Forward passes of the factored and naive depth-weighted attention with
// peak tensor memory above the pre-existing inputs.
std::vector<BenchRow> run_bench(const BenchOptions& options);
std::string bench_csv(const std::vector<BenchRow>& rows);

// ---- Demo. ---------------------------------------------------------------

struct DemoOptions {
  RunConfig config;
  std::string out_dir;
  std::string radar_csv;  // optional accumulated radar cloud replacing the simulated one
  bool oracle_streams = true;
  bool shared_query = true;  // one query vector for every cell instead of the learned grid
};

struct DemoResult {
  double ray_sep = 0.0;
  bool ray_sep_degenerate = false;
  std::size_t hit_cells = 0;
  std::vector<std::string> files;
};

// Cell-independent initial query [Q, C] drawn from `seed`, so that feature
// differences between cells come only from the sensors.
Var shared_initial_query(Tape& tape, const SensorSetup& setup, std::size_t channels, std::uint64_t seed);

// Forward pass of the configured model on the first benchmark scene.
// Writes b_i.pgm, b_r.pgm, b_ir.pgm, b_encoded.pgm (per-cell channel norm)
// and metrics.json into out_dir.
DemoResult run_demo(const DemoOptions& options);

// ---- Ablation. -----------------------------------------------------------

struct AblationVariant {
  char config = 'D';
  RadarContextView view = RadarContextView::frustum;
  std::string label() const;
};

// Rows A-D with the frustum radar context, then C and D with the BEV one.
std::vector<AblationVariant> default_ablation_variants();
// Parses "A,B,C:bev" style lists. Throws ConfigError on bad entries.
std::vector<AblationVariant> parse_ablation_variants(const std::string& list);

struct AblationRow {
  AblationVariant variant;
  std::uint64_t seed = 0;
  double mean_object_iou = 0.0;
  std::vector<double> iou;
  double ray_sep = 0.0;
};

struct AblationOptions {
  RunConfig base;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<AblationVariant> variants = default_ablation_variants();
};

// Trains every variant on every seed over the base benchmark scenes.
std::vector<AblationRow> run_ablation(const AblationOptions& options);
// CSV; the first line records the seeds and the benchmark data seed.
std::string ablation_csv(const AblationOptions& options, const std::vector<AblationRow>& rows);

// Applies a Table-4 toggle set and radar context view to an encoder config.
EncoderConfig with_variant(EncoderConfig base, const AblationVariant& v);

}  // namespace radbev
