// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/scene_sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "radbev/errors.hpp"
#include "radbev/numerics/image_io.hpp"
#include "radbev/numerics/rng.hpp"
#include "radbev/radar_stream/radar_stream.hpp"

namespace radbev {

namespace {

constexpr double kRadarHeight = 0.5;
constexpr double kClutterMaxRange = 40.0;

enum Stream : std::uint64_t { kObjects = 1, kReturns = 2, kNoise = 3, kClutter = 4 };

constexpr std::array<std::array<double, 3>, kNumClasses> kAlbedo{{
    {0.0, 0.0, 0.0},     // unused for free space
    {0.85, 0.25, 0.2},   // vehicle
    {0.2, 0.35, 0.9},    // pedestrian
}};
constexpr std::array<double, 6> kFaceShade{0.75, 0.65, 0.9, 0.55, 0.45, 1.0};

Vec3 ray_dir(const Camera& c, double u, double v) {
  const Vec3 dc{(u - c.cx) / c.fx, (v - c.cy) / c.fy, 1.0};
  const auto& r = c.rotation;
  return {r[0] * dc.x + r[3] * dc.y + r[6] * dc.z, r[1] * dc.x + r[4] * dc.y + r[7] * dc.z,
          r[2] * dc.x + r[5] * dc.y + r[8] * dc.z};
}

std::array<double, 3> background(const Vec3& origin, const Vec3& dir) {
  if (dir.z < -1e-9) {
    const double t = -origin.z / dir.z;
    const double gx = origin.x + t * dir.x, gy = origin.y + t * dir.y;
    const bool dark = (static_cast<long>(std::floor(gx / 2.0)) + static_cast<long>(std::floor(gy / 2.0))) % 2 != 0;
    const double g = dark ? 0.33 : 0.42;
    return {g, g, g * 0.95};
  }
  const double h = std::min(1.0, dir.z);
  return {0.65 - 0.2 * h, 0.75 - 0.15 * h, 0.92};
}

bool footprints_overlap(const SceneObject& a, const SceneObject& b, double margin) {
  return std::abs(a.center.x - b.center.x) < a.half_extent.x + b.half_extent.x + margin &&
         std::abs(a.center.y - b.center.y) < a.half_extent.y + b.half_extent.y + margin;
}

SceneObject moved(const SceneObject& o, double t) {
  SceneObject m = o;
  m.center.x += o.vx * t;
  m.center.y += o.vy * t;
  return m;
}

// Projected column interval of a box in one camera; empty when any corner
// is behind the near plane.
std::optional<std::pair<double, double>> column_span(const Camera& cam, const SceneObject& o) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int k = 0; k < 8; ++k) {
    const Vec3 p{o.center.x + ((k & 1) ? 1 : -1) * o.half_extent.x, o.center.y + ((k & 2) ? 1 : -1) * o.half_extent.y,
                 o.center.z + ((k & 4) ? 1 : -1) * o.half_extent.z};
    const Vec3 c = cam.to_camera(p);
    if (c.z <= kNearClip) return std::nullopt;
    const double u = cam.fx * c.x / c.z + cam.cx;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  lo = std::max(lo, 0.0);
  hi = std::min(hi, static_cast<double>(cam.width) - 1.0);
  if (hi < lo) return std::nullopt;
  return std::pair{lo, hi};
}

void render_camera(const std::vector<SceneObject>& objects, const Camera& cam, std::size_t n, Tensor& images,
                   GroundTruth& gt) {
  const std::size_t h = cam.height, w = cam.width, hw = h * w;
  Tensor depth({h, w});
  Tensor ids({h, w}, -1.0);
  const Vec3 origin = cam.center();
  double* img = images.data() + n * 3 * hw;
  for (std::size_t v = 0; v < h; ++v) {
    for (std::size_t u = 0; u < w; ++u) {
      const Vec3 dir = ray_dir(cam, static_cast<double>(u), static_cast<double>(v));
      const RayHit hit = cast_ray(objects, origin, dir);
      std::array<double, 3> rgb;
      if (hit.object >= 0) {
        const SceneObject& o = objects[static_cast<std::size_t>(hit.object)];
        const double shade = kFaceShade[static_cast<std::size_t>(hit.face)];
        for (int c = 0; c < 3; ++c) rgb[c] = kAlbedo[static_cast<std::size_t>(o.class_id)][c] * shade;
        // dir has unit camera-z component, so t is the camera depth.
        depth[v * w + u] = hit.t;
        ids[v * w + u] = hit.object;
      } else {
        rgb = background(origin, dir);
      }
      for (int c = 0; c < 3; ++c) img[c * hw + v * w + u] = rgb[c];
    }
  }

  Tensor heat({h, w});
  for (const SceneObject& o : objects) {
    const ImageProjection centre = project_point(cam, o.center);
    if (!centre.visible) continue;
    double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo, v_lo = u_lo, v_hi = -u_lo;
    for (int k = 0; k < 8; ++k) {
      const Vec3 p{o.center.x + ((k & 1) ? 1 : -1) * o.half_extent.x,
                   o.center.y + ((k & 2) ? 1 : -1) * o.half_extent.y,
                   o.center.z + ((k & 4) ? 1 : -1) * o.half_extent.z};
      const ImageProjection ip = project_point(cam, p);
      if (ip.depth <= kNearClip) continue;
      u_lo = std::min(u_lo, ip.u);
      u_hi = std::max(u_hi, ip.u);
      v_lo = std::min(v_lo, ip.v);
      v_hi = std::max(v_hi, ip.v);
    }
    const double sigma = std::max(0.75, std::min(u_hi - u_lo, v_hi - v_lo) / 6.0);
    const double u0 = std::round(centre.u), v0 = std::round(centre.v);
    for (std::size_t v = 0; v < h; ++v) {
      for (std::size_t u = 0; u < w; ++u) {
        const double du = static_cast<double>(u) - u0, dv = static_cast<double>(v) - v0;
        const double g = std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma));
        heat[v * w + u] = std::max(heat[v * w + u], g);
      }
    }
  }
  gt.depth_image.push_back(std::move(depth));
  gt.object_id.push_back(std::move(ids));
  gt.heatmap.push_back(std::move(heat));
}

Tensor rasterize_bev(const std::vector<SceneObject>& objects, const BevGrid& grid) {
  Tensor bev({grid.x_cells, grid.y_cells});
  for (const SceneObject& o : objects) {
    for (std::size_t i = 0; i < grid.x_cells; ++i) {
      for (std::size_t j = 0; j < grid.y_cells; ++j) {
        const auto [x, y] = grid.cell_center(i, j);
        if (std::abs(x - o.center.x) <= o.half_extent.x && std::abs(y - o.center.y) <= o.half_extent.y) {
          bev[grid.index(i, j)] = o.class_id;
        }
      }
    }
    // Objects narrower than a cell still mark the cell holding their centre.
    if (const auto cell = grid.cell_of(o.center.x, o.center.y)) {
      bev[grid.index(cell->first, cell->second)] = o.class_id;
    }
  }
  return bev;
}

// Uniform point on the radar-facing vertical faces of a box, area weighted.
Vec3 sample_face_point(const SceneObject& o, const Vec3& radar, Rng& rng) {
  const Vec3& c = o.center;
  const Vec3& e = o.half_extent;
  struct Face {
    int axis;
    double sign, area;
  };
  std::vector<Face> faces;
  if (radar.x < c.x - e.x) faces.push_back({0, -1.0, e.y * e.z});
  if (radar.x > c.x + e.x) faces.push_back({0, 1.0, e.y * e.z});
  if (radar.y < c.y - e.y) faces.push_back({1, -1.0, e.x * e.z});
  if (radar.y > c.y + e.y) faces.push_back({1, 1.0, e.x * e.z});
  if (faces.empty()) return c;
  double total = 0.0;
  for (const Face& f : faces) total += f.area;
  double pick = rng.uniform() * total;
  const Face* chosen = &faces.back();
  for (const Face& f : faces) {
    if (pick < f.area) {
      chosen = &f;
      break;
    }
    pick -= f.area;
  }
  const double s = rng.uniform(-1.0, 1.0), z = c.z + e.z * rng.uniform(-1.0, 1.0);
  if (chosen->axis == 0) return {c.x + chosen->sign * e.x, c.y + s * e.y, z};
  return {c.x + s * e.x, c.y + chosen->sign * e.y, z};
}

}  // namespace

void SceneSpec::validate(const BevGrid& grid) const {
  if (sweeps < 1 || sweeps > static_cast<std::size_t>(kMaxSweepIndex) + 1) {
    throw SpecError("scene: sweep count must be in [1, 7]");
  }
  if (clutter_rate < 0.0 || range_sigma < 0.0 || azimuth_sigma < 0.0 || returns_per_object < 0.0) {
    throw SpecError("scene: rates and noise sigmas must be non-negative");
  }
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const SceneObject& o = objects[k];
    const std::string tag = "scene: object " + std::to_string(k);
    if (!(o.half_extent.x > 0.0 && o.half_extent.y > 0.0 && o.half_extent.z > 0.0)) {
      throw SpecError(tag + " has zero volume");
    }
    if (o.class_id < 1 || o.class_id >= kNumClasses) throw SpecError(tag + " has unknown class");
    if (!grid.cell_of(o.center.x, o.center.y)) throw SpecError(tag + " lies outside the BEV grid");
  }
}

SensorSetup SensorSetup::desk() {
  SensorSetup s;
  s.rig = CameraRig::ring(2, 48, 96, 120.0 * std::numbers::pi / 180.0);
  return s;
}

std::size_t SensorSetup::frustum_cols(std::size_t cam) const {
  return (rig.cameras.at(cam).width + radar_stride - 1) / radar_stride;
}

void SensorSetup::validate() const {
  rig.validate();
  grid.validate();
  bins.validate();
  if (radar_stride == 0) throw ConfigError("setup: radar stride must be positive");
}

std::vector<int> GroundTruth::labels() const {
  std::vector<int> out(bev_class.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(bev_class[i]);
  return out;
}

RayHit cast_ray(const std::vector<SceneObject>& objects, const Vec3& origin, const Vec3& dir) {
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const SceneObject& b = objects[k];
    const double lo[3] = {b.center.x - b.half_extent.x, b.center.y - b.half_extent.y, b.center.z - b.half_extent.z};
    const double hi[3] = {b.center.x + b.half_extent.x, b.center.y + b.half_extent.y, b.center.z + b.half_extent.z};
    double t_near = -std::numeric_limits<double>::infinity(), t_far = std::numeric_limits<double>::infinity();
    int face = -1;
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
      if (std::abs(d[a]) < 1e-15) {
        if (o[a] < lo[a] || o[a] > hi[a]) miss = true;
        continue;
      }
      double t0 = (lo[a] - o[a]) / d[a], t1 = (hi[a] - o[a]) / d[a];
      int f = 2 * a;
      if (t0 > t1) {
        std::swap(t0, t1);
        f = 2 * a + 1;
      }
      if (t0 > t_near) {
        t_near = t0;
        face = f;
      }
      t_far = std::min(t_far, t1);
      if (t_near > t_far) miss = true;
    }
    if (miss || t_near <= 0.0 || face < 0) continue;
    if (t_near < best.t) {
      best.t = t_near;
      best.object = static_cast<int>(k);
      best.face = face;
    }
  }
  if (best.object < 0) best.t = 0.0;
  return best;
}

SceneFrame generate_scene(const SceneSpec& spec, const SensorSetup& setup) {
  setup.validate();
  spec.validate(setup.grid);
  SceneFrame frame;
  const std::size_t n_cams = setup.rig.size();
  const Camera& c0 = setup.rig.cameras.front();
  frame.images = Tensor({n_cams, 3, c0.height, c0.width});
  for (std::size_t n = 0; n < n_cams; ++n) {
    if (setup.rig.cameras[n].height != c0.height || setup.rig.cameras[n].width != c0.width) {
      throw ConfigError("scene: all cameras must share one image size");
    }
    render_camera(spec.objects, setup.rig.cameras[n], n, frame.images, frame.gt);
  }
  frame.gt.bev_class = rasterize_bev(spec.objects, setup.grid);

  Rng returns = Rng::stream(spec.seed, kReturns);
  Rng noise = Rng::stream(spec.seed, kNoise);
  Rng clutter = Rng::stream(spec.seed, kClutter);
  const Vec3 radar{0.0, 0.0, kRadarHeight};
  for (std::size_t k = 0; k < spec.sweeps; ++k) {
    const double t = -static_cast<double>(k) * spec.sweep_dt;
    const EgoPose pose{spec.ego_vx * t, spec.ego_vy * t, 0.0};
    RadarPointCloud cloud;
    std::vector<RadarTruth> truth;
    for (std::size_t oi = 0; oi < spec.objects.size(); ++oi) {
      // Object position at time t, expressed in the sweep's ego frame.
      SceneObject o = moved(spec.objects[oi], t);
      o.center.x -= pose.x;
      o.center.y -= pose.y;
      const int count = 1 + returns.poisson(spec.returns_per_object);
      for (int r = 0; r < count; ++r) {
        const Vec3 p = sample_face_point(o, radar, returns);
        const double rcs = o.rcs + returns.normal(0.0, 1.0);
        const double dx = p.x - radar.x, dy = p.y - radar.y;
        const double range = std::hypot(dx, dy) + noise.normal(0.0, spec.range_sigma);
        const double az = std::atan2(dy, dx) + noise.normal(0.0, spec.azimuth_sigma);
        const double ux = std::cos(az), uy = std::sin(az);
        const double radial = o.vx * ux + o.vy * uy;
        cloud.points.push_back(
            {radar.x + range * ux, radar.y + range * uy, p.z, rcs, radial * ux, radial * uy, static_cast<int>(k)});
        truth.push_back({static_cast<int>(oi), p});
      }
    }
    const int n_clutter = clutter.poisson(spec.clutter_rate);
    for (int c = 0; c < n_clutter; ++c) {
      const double range = clutter.uniform(1.0, kClutterMaxRange);
      const double az = clutter.uniform(-std::numbers::pi, std::numbers::pi);
      const Vec3 p{radar.x + range * std::cos(az), radar.y + range * std::sin(az), clutter.uniform(0.0, 2.0)};
      cloud.points.push_back({p.x, p.y, p.z, clutter.normal(-5.0, 3.0), 0.0, 0.0, static_cast<int>(k)});
      truth.push_back({-1, p});
    }
    frame.sweeps.push_back(std::move(cloud));
    frame.truth.push_back(std::move(truth));
    frame.poses.push_back(pose);
  }
  return frame;
}

SceneSpec same_ray_scenario(double d_near, double d_far, double azimuth, const SensorSetup& setup,
                            std::uint64_t seed) {
  const DepthBins& bins = setup.bins;
  if (!(bins.d_min < d_near && d_near < d_far && d_far < bins.d_max)) {
    throw SpecError("same_ray_scenario: need d_min < d_near < d_far < d_max");
  }
  const Camera& cam = setup.rig.cameras.at(0);
  const Vec3 origin = cam.center();
  const double ux = std::cos(azimuth), uy = std::sin(azimuth);
  const bool along_x = std::abs(ux) >= std::abs(uy);
  // Near: pedestrian-sized box. Far: vehicle presented broadside.
  SceneObject near{{origin.x + d_near * ux, origin.y + d_near * uy, 0.9}, {0.4, 0.4, 0.9}, kClassPedestrian, -5.0};
  SceneObject far{{origin.x + d_far * ux, origin.y + d_far * uy, 0.8},
                  along_x ? Vec3{0.9, 2.0, 0.8} : Vec3{2.0, 0.9, 0.8},
                  kClassVehicle,
                  10.0};
  const auto a = column_span(cam, near), b = column_span(cam, far);
  if (!a || !b || std::min(a->second, b->second) <= std::max(a->first, b->first)) {
    throw GeometryError("same_ray_scenario: objects do not overlap in camera 0's image columns");
  }
  SceneSpec spec;
  spec.seed = seed;
  spec.objects = {near, far};
  return spec;
}

SceneSpec random_scene(std::uint64_t seed, std::size_t n_objects, const SensorSetup& setup) {
  Rng rng = Rng::stream(seed, kObjects);
  SceneSpec spec;
  spec.seed = seed;
  const double margin = setup.grid.cell_size();
  for (int attempt = 0; attempt < 1000 && spec.objects.size() < n_objects; ++attempt) {
    const std::size_t cam = static_cast<std::size_t>(rng.next() % setup.rig.size());
    const Camera& c = setup.rig.cameras[cam];
    const double half_fov = std::atan((static_cast<double>(c.width) / 2.0) / c.fx);
    // Camera forward direction in ego xy.
    const double yaw = std::atan2(c.rotation[7], c.rotation[6]);
    const double az = yaw + rng.uniform(-0.8, 0.8) * half_fov;
    const double range = rng.uniform(5.0, 20.0);
    SceneObject o;
    if (rng.uniform() < 0.6) {
      o.class_id = kClassVehicle;
      const double len = rng.uniform(1.7, 2.3), wid = rng.uniform(0.8, 1.0);
      const bool along_x = rng.uniform() < 0.5;
      o.half_extent = along_x ? Vec3{len, wid, rng.uniform(0.7, 0.9)} : Vec3{wid, len, rng.uniform(0.7, 0.9)};
      o.rcs = rng.uniform(5.0, 15.0);
      const double speed = rng.uniform(-8.0, 8.0);
      o.vx = along_x ? speed : 0.0;
      o.vy = along_x ? 0.0 : speed;
    } else {
      o.class_id = kClassPedestrian;
      o.half_extent = {rng.uniform(0.3, 0.45), rng.uniform(0.3, 0.45), rng.uniform(0.8, 0.95)};
      o.rcs = rng.uniform(-8.0, -2.0);
      o.vx = rng.uniform(-1.5, 1.5);
      o.vy = rng.uniform(-1.5, 1.5);
    }
    o.center = {range * std::cos(az), range * std::sin(az), o.half_extent.z};
    const double lim = setup.grid.extent - margin;
    if (std::abs(o.center.x) + o.half_extent.x > lim || std::abs(o.center.y) + o.half_extent.y > lim) continue;
    bool clash = false;
    for (const SceneObject& other : spec.objects) clash = clash || footprints_overlap(o, other, 0.5);
    if (clash) continue;
    spec.objects.push_back(o);
  }
  return spec;
}

std::string scene_to_json(const SceneSpec& spec) {
  nlohmann::json j;
  j["seed"] = spec.seed;
  j["clutter_rate"] = spec.clutter_rate;
  j["range_sigma"] = spec.range_sigma;
  j["azimuth_sigma"] = spec.azimuth_sigma;
  j["sweeps"] = spec.sweeps;
  j["sweep_dt"] = spec.sweep_dt;
  j["ego_velocity"] = {spec.ego_vx, spec.ego_vy};
  j["returns_per_object"] = spec.returns_per_object;
  j["objects"] = nlohmann::json::array();
  for (const SceneObject& o : spec.objects) {
    j["objects"].push_back({{"center", {o.center.x, o.center.y, o.center.z}},
                            {"half_extent", {o.half_extent.x, o.half_extent.y, o.half_extent.z}},
                            {"class", o.class_id},
                            {"rcs", o.rcs},
                            {"velocity", {o.vx, o.vy}}});
  }
  return j.dump(2);
}

SceneSpec scene_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    SceneSpec s;
    s.seed = j.value("seed", s.seed);
    s.clutter_rate = j.value("clutter_rate", s.clutter_rate);
    s.range_sigma = j.value("range_sigma", s.range_sigma);
    s.azimuth_sigma = j.value("azimuth_sigma", s.azimuth_sigma);
    s.sweeps = j.value("sweeps", s.sweeps);
    s.sweep_dt = j.value("sweep_dt", s.sweep_dt);
    s.returns_per_object = j.value("returns_per_object", s.returns_per_object);
    if (j.contains("ego_velocity")) {
      s.ego_vx = j["ego_velocity"].at(0).get<double>();
      s.ego_vy = j["ego_velocity"].at(1).get<double>();
    }
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
      SceneObject ob;
      const auto& c = o.at("center");
      const auto& e = o.at("half_extent");
      ob.center = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
      ob.half_extent = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()};
      ob.class_id = o.value("class", ob.class_id);
      ob.rcs = o.value("rcs", ob.rcs);
      if (o.contains("velocity")) {
        ob.vx = o["velocity"].at(0).get<double>();
        ob.vy = o["velocity"].at(1).get<double>();
      }
      s.objects.push_back(ob);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scene json: ") + e.what());
  }
}

void dump_fixture(const std::string& dir, const SceneSpec& spec, const SceneFrame& frame) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "scene.json");
    if (!os) throw DataError("cannot write scene.json in " + dir);
    os << scene_to_json(spec) << '\n';
  }
  const std::size_t n = frame.images.dim(0), h = frame.images.dim(2), w = frame.images.dim(3);
  for (std::size_t cam = 0; cam < n; ++cam) {
    Tensor lum({h, w});
    const double* img = frame.images.data() + cam * 3 * h * w;
    for (std::size_t i = 0; i < h * w; ++i) {
      lum[i] = 0.299 * img[i] + 0.587 * img[h * w + i] + 0.114 * img[2 * h * w + i];
    }
    write_pgm((fs::path(dir) / ("cam" + std::to_string(cam) + ".pgm")).string(), to_gray(lum, 0.0, 1.0));
  }
  save_radar_csv((fs::path(dir) / "radar.csv").string(), accumulate_sweeps(frame.sweeps, frame.poses));
  write_pgm((fs::path(dir) / "gt_bev.pgm").string(),
            to_gray(frame.gt.bev_class, 0.0, static_cast<double>(kNumClasses - 1)));
}

}  // namespace radbev
