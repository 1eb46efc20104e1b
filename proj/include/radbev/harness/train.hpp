// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "radbev/camera_stream/camera_stream.hpp"
#include "radbev/harness/losses.hpp"
#include "radbev/radar_stream/radar_stream.hpp"
#include "radbev/scene_sim/scene.hpp"
#include "radbev/view_transform/view_transform.hpp"

namespace radbev {

/// Sensor and grid sizes from which a SensorSetup is built.
struct SetupDims {
  std::size_t cameras = 2;
  std::size_t image_height = 48, image_width = 96;
  double hfov_deg = 120.0;
  std::size_t bev_cells = 48;
  double bev_extent = 24.0;
  std::size_t depth_bins = 32;
  double d_min = 0.5, d_max = 40.0;
  std::size_t radar_stride = 4;

  SensorSetup build() const;
};

struct ModelDims {
  std::size_t channels = 16;
  std::size_t image_trunk = 8;
  std::size_t radar_width = 16;
  std::size_t seg_hidden = 16;
};

/// Fixed scene set a run trains and evaluates on.
struct BenchmarkSpec {
  std::string kind = "random";  // "random" or "same_ray"
  std::uint64_t data_seed = 1000;
  std::size_t n_scenes = 8;
  std::size_t objects = 3;  // per random scene
  double clutter_rate = 5.0;

  std::vector<SceneSpec> scenes(const SensorSetup& setup) const;
};

struct RunConfig {
  std::string name = "desk";
  SetupDims setup;
  ModelDims model;
  EncoderConfig encoder;
  BenchmarkSpec benchmark;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  std::size_t steps = 300;
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;  // 0: evaluate only after the last step
  std::string out_dir;         // empty: no files written

  // Throws ConfigError for lr <= 0, zero steps or an invalid encoder config.
  void validate() const;

  // "desk", "paper", "same_ray" or "bench".
  static RunConfig preset(const std::string& name);
};

std::string run_config_to_json(const RunConfig& cfg);
// Missing keys keep the defaults of the "desk" preset. Throws ConfigError
// on malformed JSON or unknown keys.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

struct Model {
  ImageEncoderParams image;
  RadarEncoderParams radar;
  EncoderParams encoder;
  SegHeadParams head;

  static Model make(const RunConfig& cfg, const SensorSetup& setup);
  void collect(std::vector<Parameter*>& out);
};

/// A scene rendered once, with its radar pillars and BEV labels.
struct Sample {
  SceneSpec spec;
  SceneFrame frame;
  std::vector<FrustumPillars> pillars;
  std::vector<int> labels;
  // BEV cells of the first two objects, used for the ray separation probe.
  std::optional<std::pair<std::size_t, std::size_t>> probe;
};

Sample prepare_sample(const SceneSpec& spec, const SensorSetup& setup);

// Same-ray pair at one and two thirds of the grid extent ((8, 16) m on the
// desk grid), used to probe ray separation during training.
SceneSpec ray_probe_scene(const SensorSetup& setup, std::uint64_t seed);
Sample prepare_sample_from_cloud(const SceneSpec& spec, const SensorSetup& setup, const RadarPointCloud& cloud);

enum class StreamSource { learned, oracle };

struct ForwardResult {
  ImageStreamOutput image;
  RadarStreamOutput radar;
  BevState bev;
  Var logits;  // [K, X, Y]
  Var loss;
  LossBreakdown parts;
};

// One forward pass with losses. Oracle sources replace the learned streams
// by ideal_image_outputs / ideal_radar_outputs.
ForwardResult forward_model(Tape& tape, Model& model, const Sample& sample, const ViewGeometry& geo,
                            const SensorSetup& setup, const EncoderConfig& cfg,
                            StreamSource image_source = StreamSource::learned,
                            StreamSource radar_source = StreamSource::learned,
                            std::optional<Var> initial_query = std::nullopt);

/// AdamW with decoupled weight decay on parameters flagged `decay`.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);
  void zero_grad();
  void step();

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct MetricsRow {
  std::size_t step = 0;
  LossBreakdown loss;
  std::vector<double> iou;          // per class on the step's scene
  std::optional<double> ray_sep;    // on evaluation steps
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  IouCounts eval_iou;  // accumulated over all benchmark scenes after training
  double ray_sep = 0.0;
  bool ray_sep_degenerate = false;
};

// Metrics CSV with header step, loss_total, loss_depth, loss_occ, loss_task,
// iou_<class>..., ray_sep.
std::string metrics_csv(const std::vector<MetricsRow>& rows);

// Trains from scratch. When cfg.out_dir is set, writes metrics.csv,
// summary.json and checkpoint.bin there. A non-finite loss writes
// diagnostics.json and throws NumericError.
TrainResult train(const RunConfig& cfg);

// Forward-only evaluation of the model on every sample.
IouCounts evaluate(Model& model, const std::vector<Sample>& samples, const ViewGeometry& geo,
                   const SensorSetup& setup, const EncoderConfig& cfg);

// Ray separation of the encoded features at the sample's probe cells.
RaySeparation probe_ray_separation(Model& model, const Sample& sample, const ViewGeometry& geo,
                                   const SensorSetup& setup, const EncoderConfig& cfg);

}  // namespace radbev
