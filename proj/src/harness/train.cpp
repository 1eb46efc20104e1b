// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/harness/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "radbev/errors.hpp"
#include "radbev/numerics/ops.hpp"
#include "radbev/numerics/serialize.hpp"

namespace radbev {

namespace {

using nlohmann::json;

constexpr std::uint64_t kModelStream = 10;
constexpr std::uint64_t kBenchmarkStream = 11;
const char* const kClassNames[kNumClasses] = {"free", "vehicle", "pedestrian"};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ResourceError("cannot write " + path.string());
  os << text;
}

// Reads `key` into `value` when present and records it as consumed.
template <typename T>
void read_key(const json& j, const char* key, T& value, std::vector<std::string>& seen) {
  seen.emplace_back(key);
  if (j.contains(key)) value = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::vector<std::string>& seen, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

std::optional<std::size_t> cell_index(const BevGrid& grid, const Vec3& p) {
  if (const auto c = grid.cell_of(p.x, p.y)) return grid.index(c->first, c->second);
  return std::nullopt;
}

}  // namespace

SensorSetup SetupDims::build() const {
  SensorSetup s;
  s.rig = CameraRig::ring(cameras, image_height, image_width, hfov_deg * std::numbers::pi / 180.0);
  s.grid.x_cells = bev_cells;
  s.grid.y_cells = bev_cells;
  s.grid.extent = bev_extent;
  s.bins.count = depth_bins;
  s.bins.d_min = d_min;
  s.bins.d_max = d_max;
  s.radar_stride = radar_stride;
  s.validate();
  return s;
}

std::vector<SceneSpec> BenchmarkSpec::scenes(const SensorSetup& setup) const {
  std::vector<SceneSpec> out;
  Rng rng = Rng::stream(data_seed, kBenchmarkStream);
  const Camera& cam = setup.rig.cameras.at(0);
  const double half_fov = std::atan((static_cast<double>(cam.width) / 2.0) / cam.fx);
  for (std::size_t k = 0; k < n_scenes; ++k) {
    const std::uint64_t seed = data_seed * 1000 + k;
    SceneSpec spec;
    if (kind == "random") {
      spec = random_scene(seed, objects, setup);
    } else if (kind == "same_ray") {
      for (int attempt = 0;; ++attempt) {
        if (attempt == 100) throw GeometryError("benchmark: no valid same-ray pair found");
        const double d_near = rng.uniform(5.0, 11.0);
        const double d_far = d_near + rng.uniform(5.0, 9.0);
        const double az = rng.uniform(-0.6, 0.6) * half_fov;
        try {
          spec = same_ray_scenario(d_near, d_far, az, setup, seed);
          spec.validate(setup.grid);
          break;
        } catch (const Error&) {
          continue;
        }
      }
    } else {
      throw ConfigError("benchmark: unknown kind '" + kind + "'");
    }
    spec.clutter_rate = clutter_rate;
    out.push_back(std::move(spec));
  }
  return out;
}

void RunConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("config: learning rate must be positive");
  if (steps < 1) throw ConfigError("config: steps must be at least 1");
  if (weight_decay < 0.0) throw ConfigError("config: weight decay must be non-negative");
  if (benchmark.n_scenes < 1) throw ConfigError("config: benchmark needs at least one scene");
  if (model.channels < kPointFeatures) throw ConfigError("config: need at least 7 channels");
  encoder.validate();
}

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig c;
  c.name = name;
  if (name == "desk") return c;
  if (name == "same_ray") {
    c.benchmark.kind = "same_ray";
    return c;
  }
  if (name == "bench") {
    c.setup.image_height = 32;
    c.setup.image_width = 64;
    c.setup.bev_cells = 32;
    c.setup.depth_bins = 24;
    c.model.image_trunk = 8;
    return c;
  }
  if (name == "paper") {
    c.setup.cameras = 6;
    c.setup.hfov_deg = 70.0;
    c.setup.bev_cells = 200;
    c.setup.bev_extent = 51.2;
    c.setup.d_max = 60.0;
    c.setup.depth_bins = 64;
    c.encoder.n_layers = 6;
    c.lr = 2e-4;
    c.model.channels = 256;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["setup"] = {{"cameras", cfg.setup.cameras},         {"image_height", cfg.setup.image_height},
                {"image_width", cfg.setup.image_width}, {"hfov_deg", cfg.setup.hfov_deg},
                {"bev_cells", cfg.setup.bev_cells},     {"bev_extent", cfg.setup.bev_extent},
                {"depth_bins", cfg.setup.depth_bins},   {"d_min", cfg.setup.d_min},
                {"d_max", cfg.setup.d_max},             {"radar_stride", cfg.setup.radar_stride}};
  j["model"] = {{"channels", cfg.model.channels},
                {"image_trunk", cfg.model.image_trunk},
                {"radar_width", cfg.model.radar_width},
                {"seg_hidden", cfg.model.seg_hidden}};
  const EncoderConfig& e = cfg.encoder;
  j["encoder"] = {{"n_layers", e.n_layers},
                  {"use_ddsca", e.use_ddsca},
                  {"use_rosca", e.use_rosca},
                  {"use_rcsca", e.use_rcsca},
                  {"ffn_width", e.ffn_width},
                  {"norm", e.norm},
                  {"n_heads", e.n_heads},
                  {"n_points", e.n_points},
                  {"fuse_once", e.fuse_once},
                  {"share_attn", e.share_attn},
                  {"rcsca_view", e.rcsca_view == RadarContextView::frustum ? "frustum" : "bev"},
                  {"radar_occ_softmax", e.radar_occ_softmax}};
  j["benchmark"] = {{"kind", cfg.benchmark.kind},
                    {"data_seed", cfg.benchmark.data_seed},
                    {"n_scenes", cfg.benchmark.n_scenes},
                    {"objects", cfg.benchmark.objects},
                    {"clutter_rate", cfg.benchmark.clutter_rate}};
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["steps"] = cfg.steps;
  j["seed"] = cfg.seed;
  j["eval_every"] = cfg.eval_every;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  try {
    std::vector<std::string> seen;
    read_key(j, "name", c.name, seen);
    if (j.contains("preset")) c = RunConfig::preset(j.at("preset").get<std::string>());
    seen.emplace_back("preset");
    read_key(j, "lr", c.lr, seen);
    read_key(j, "weight_decay", c.weight_decay, seen);
    read_key(j, "steps", c.steps, seen);
    read_key(j, "seed", c.seed, seen);
    read_key(j, "eval_every", c.eval_every, seen);
    read_key(j, "out_dir", c.out_dir, seen);
    seen.insert(seen.end(), {"setup", "model", "encoder", "benchmark"});
    reject_unknown(j, seen, "top level");
    if (j.contains("setup")) {
      const json& s = j.at("setup");
      std::vector<std::string> ks;
      read_key(s, "cameras", c.setup.cameras, ks);
      read_key(s, "image_height", c.setup.image_height, ks);
      read_key(s, "image_width", c.setup.image_width, ks);
      read_key(s, "hfov_deg", c.setup.hfov_deg, ks);
      read_key(s, "bev_cells", c.setup.bev_cells, ks);
      read_key(s, "bev_extent", c.setup.bev_extent, ks);
      read_key(s, "depth_bins", c.setup.depth_bins, ks);
      read_key(s, "d_min", c.setup.d_min, ks);
      read_key(s, "d_max", c.setup.d_max, ks);
      read_key(s, "radar_stride", c.setup.radar_stride, ks);
      reject_unknown(s, ks, "setup");
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      std::vector<std::string> ks;
      read_key(m, "channels", c.model.channels, ks);
      read_key(m, "image_trunk", c.model.image_trunk, ks);
      read_key(m, "radar_width", c.model.radar_width, ks);
      read_key(m, "seg_hidden", c.model.seg_hidden, ks);
      reject_unknown(m, ks, "model");
    }
    if (j.contains("encoder")) {
      const json& e = j.at("encoder");
      std::vector<std::string> ks;
      if (e.contains("config")) {
        const std::string name = e.at("config").get<std::string>();
        if (name.size() != 1) throw ConfigError("config: encoder config must be one of A, B, C, D");
        const EncoderConfig p = EncoderConfig::preset(name[0]);
        c.encoder.use_ddsca = p.use_ddsca;
        c.encoder.use_rosca = p.use_rosca;
        c.encoder.use_rcsca = p.use_rcsca;
      }
      ks.emplace_back("config");
      read_key(e, "n_layers", c.encoder.n_layers, ks);
      read_key(e, "use_ddsca", c.encoder.use_ddsca, ks);
      read_key(e, "use_rosca", c.encoder.use_rosca, ks);
      read_key(e, "use_rcsca", c.encoder.use_rcsca, ks);
      read_key(e, "ffn_width", c.encoder.ffn_width, ks);
      read_key(e, "norm", c.encoder.norm, ks);
      read_key(e, "n_heads", c.encoder.n_heads, ks);
      read_key(e, "n_points", c.encoder.n_points, ks);
      read_key(e, "fuse_once", c.encoder.fuse_once, ks);
      read_key(e, "share_attn", c.encoder.share_attn, ks);
      read_key(e, "radar_occ_softmax", c.encoder.radar_occ_softmax, ks);
      std::string view = c.encoder.rcsca_view == RadarContextView::frustum ? "frustum" : "bev";
      read_key(e, "rcsca_view", view, ks);
      if (view == "frustum") {
        c.encoder.rcsca_view = RadarContextView::frustum;
      } else if (view == "bev") {
        c.encoder.rcsca_view = RadarContextView::bev;
      } else {
        throw ConfigError("config: rcsca_view must be 'frustum' or 'bev'");
      }
      reject_unknown(e, ks, "encoder");
    }
    if (j.contains("benchmark")) {
      const json& b = j.at("benchmark");
      std::vector<std::string> ks;
      read_key(b, "kind", c.benchmark.kind, ks);
      read_key(b, "data_seed", c.benchmark.data_seed, ks);
      read_key(b, "n_scenes", c.benchmark.n_scenes, ks);
      read_key(b, "objects", c.benchmark.objects, ks);
      read_key(b, "clutter_rate", c.benchmark.clutter_rate, ks);
      reject_unknown(b, ks, "benchmark");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return run_config_from_json(ss.str());
}

Model Model::make(const RunConfig& cfg, const SensorSetup& setup) {
  Rng rng = Rng::stream(cfg.seed, kModelStream);
  Model m;
  m.image = ImageEncoderParams::make(cfg.model.channels, cfg.model.image_trunk, setup.bins.count, rng);
  m.radar = RadarEncoderParams::make(cfg.model.channels, cfg.model.radar_width, rng);
  m.encoder = EncoderParams::make(cfg.encoder, setup, cfg.model.channels, rng);
  m.head = SegHeadParams::make(cfg.model.channels, cfg.model.seg_hidden, kNumClasses, rng);
  return m;
}

void Model::collect(std::vector<Parameter*>& out) {
  image.collect(out);
  radar.collect(out);
  encoder.collect(out);
  head.collect(out);
}

Sample prepare_sample_from_cloud(const SceneSpec& spec, const SensorSetup& setup, const RadarPointCloud& cloud) {
  Sample s;
  s.spec = spec;
  s.frame = generate_scene(spec, setup);
  for (std::size_t cam = 0; cam < setup.rig.size(); ++cam) {
    s.pillars.push_back(voxelize_frustum(cloud, setup.rig, cam, setup.bins, setup.radar_stride));
  }
  s.labels = s.frame.gt.labels();
  if (spec.objects.size() >= 2) {
    const auto a = cell_index(setup.grid, spec.objects[0].center);
    const auto b = cell_index(setup.grid, spec.objects[1].center);
    if (a && b) s.probe = std::make_pair(*a, *b);
  }
  return s;
}

Sample prepare_sample(const SceneSpec& spec, const SensorSetup& setup) {
  const SceneFrame frame = generate_scene(spec, setup);
  return prepare_sample_from_cloud(spec, setup, accumulate_sweeps(frame.sweeps, frame.poses));
}

ForwardResult forward_model(Tape& tape, Model& model, const Sample& sample, const ViewGeometry& geo,
                            const SensorSetup& setup, const EncoderConfig& cfg, StreamSource image_source,
                            StreamSource radar_source, std::optional<Var> initial_query) {
  ForwardResult r;
  const std::size_t c = model.encoder.channels();
  r.image = image_source == StreamSource::learned
                ? encode_images(tape, sample.frame.images, model.image)
                : ideal_image_outputs(tape, sample.frame.gt, sample.spec.objects, setup.bins, c);
  const bool needs_radar = cfg.use_rosca || cfg.use_rcsca;
  if (needs_radar) {
    r.radar = radar_source == StreamSource::learned
                  ? encode_pillars(tape, sample.pillars, model.radar, cfg.radar_occ_softmax)
                  : ideal_radar_outputs(tape, sample.pillars, c);
  }
  r.bev = encoder_forward(tape, r.image, needs_radar ? &r.radar : nullptr, geo, setup, model.encoder, cfg,
                          initial_query);
  const Var map = ops::reshape(ops::transpose(r.bev.b_encoded), {c, setup.grid.x_cells, setup.grid.y_cells});
  r.logits = seg_head_forward(tape, map, model.head);
  const Var l_depth = depth_loss(tape, r.image.depth, sample.frame.gt.depth_image, setup.bins);
  const Var l_occ = occupancy_loss(tape, r.image.occupancy, sample.frame.gt.heatmap);
  const Var l_task = segmentation_loss(r.logits, sample.labels);
  r.loss = ops::add(ops::add(l_depth, l_occ), l_task);
  r.parts.depth = l_depth.value()[0];
  r.parts.occupancy = l_occ.value()[0];
  r.parts.task = l_task.value()[0];
  r.parts.total = r.loss.value()[0];
  return r;
}

AdamW::AdamW(std::vector<Parameter*> params, double lr, double weight_decay, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Parameter* p : params_) {
    m_.push_back(Tensor::like(p->value));
    v_.push_back(Tensor::like(p->value));
  }
}

void AdamW::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void AdamW::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    const double decay = p.decay ? lr_ * weight_decay_ : 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p.value[i] -= decay * p.value[i];
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "step,loss_total,loss_depth,loss_occ,loss_task";
  for (const char* name : kClassNames) os << ",iou_" << name;
  os << ",ray_sep\n";
  for (const MetricsRow& r : rows) {
    os << r.step << ',' << fmt(r.loss.total) << ',' << fmt(r.loss.depth) << ',' << fmt(r.loss.occupancy) << ','
       << fmt(r.loss.task);
    for (double v : r.iou) os << ',' << fmt(v);
    os << ',';
    if (r.ray_sep) os << fmt(*r.ray_sep);
    os << '\n';
  }
  return os.str();
}

IouCounts evaluate(Model& model, const std::vector<Sample>& samples, const ViewGeometry& geo,
                   const SensorSetup& setup, const EncoderConfig& cfg) {
  IouCounts total;
  for (const Sample& s : samples) {
    Tape tape;
    const ForwardResult r = forward_model(tape, model, s, geo, setup, cfg);
    total.add(iou_counts(r.logits.value(), s.labels));
  }
  return total;
}

RaySeparation probe_ray_separation(Model& model, const Sample& sample, const ViewGeometry& geo,
                                   const SensorSetup& setup, const EncoderConfig& cfg) {
  if (!sample.probe) throw ConfigError("ray separation: sample has no probe cells");
  Tape tape;
  const ForwardResult r = forward_model(tape, model, sample, geo, setup, cfg);
  return ray_separation_score(r.bev.b_encoded.value(), sample.probe->first, sample.probe->second);
}

SceneSpec ray_probe_scene(const SensorSetup& setup, std::uint64_t seed) {
  const double e = setup.grid.extent;
  return same_ray_scenario(e / 3.0, 2.0 * e / 3.0, 0.0, setup, seed);
}

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  const SensorSetup setup = cfg.setup.build();
  const ViewGeometry geo = build_view_geometry(setup);
  std::vector<Sample> samples;
  for (const SceneSpec& spec : cfg.benchmark.scenes(setup)) samples.push_back(prepare_sample(spec, setup));
  const Sample probe = prepare_sample(ray_probe_scene(setup, cfg.benchmark.data_seed), setup);

  Model model = Model::make(cfg, setup);
  std::vector<Parameter*> params;
  model.collect(params);
  AdamW opt(params, cfg.lr, cfg.weight_decay);

  const std::filesystem::path out = cfg.out_dir;
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(out);

  TrainResult result;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Sample& s = samples[step % samples.size()];
    Tape tape;
    opt.zero_grad();
    const ForwardResult r = forward_model(tape, model, s, geo, setup, cfg.encoder);
    MetricsRow row;
    row.step = step;
    row.loss = r.parts;
    if (!std::isfinite(r.parts.total)) {
      if (!cfg.out_dir.empty()) {
        json d;
        d["step"] = step;
        d["scene_seed"] = s.spec.seed;
        d["loss"] = {{"total", fmt(r.parts.total)},
                     {"depth", fmt(r.parts.depth)},
                     {"occupancy", fmt(r.parts.occupancy)},
                     {"task", fmt(r.parts.task)}};
        for (const Parameter* p : params) {
          double n = 0.0;
          bool finite = true;
          for (double v : p->value.values()) {
            n += v * v;
            finite = finite && std::isfinite(v);
          }
          d["param_norms"][p->name] = finite ? fmt(std::sqrt(n)) : "non-finite";
        }
        write_text(out / "diagnostics.json", d.dump(2) + "\n");
        write_text(out / "metrics.csv", metrics_csv(result.rows));
      }
      throw NumericError("train: non-finite loss at step " + std::to_string(step));
    }
    tape.backward(r.loss);
    opt.step();
    row.iou = iou_counts(r.logits.value(), s.labels).iou();
    const bool last = step + 1 == cfg.steps;
    if (last || (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0)) {
      const RaySeparation sep = probe_ray_separation(model, probe, geo, setup, cfg.encoder);
      row.ray_sep = sep.score;
      if (last) {
        result.ray_sep = sep.score;
        result.ray_sep_degenerate = sep.degenerate;
      }
    }
    result.rows.push_back(std::move(row));
  }
  result.eval_iou = evaluate(model, samples, geo, setup, cfg.encoder);

  if (!cfg.out_dir.empty()) {
    write_text(out / "metrics.csv", metrics_csv(result.rows));
    json summary;
    summary["config"] = json::parse(run_config_to_json(cfg));
    summary["config"].erase("out_dir");
    const std::vector<double> iou = result.eval_iou.iou();
    for (std::size_t k = 0; k < iou.size(); ++k) summary["eval_iou"][kClassNames[k]] = fmt(iou[k]);
    summary["eval_mean_object_iou"] = fmt(result.eval_iou.mean_iou());
    summary["ray_sep"] = fmt(result.ray_sep);
    write_text(out / "summary.json", summary.dump(2) + "\n");
    save_checkpoint((out / "checkpoint.bin").string(), params);
  }
  return result;
}

}  // namespace radbev
