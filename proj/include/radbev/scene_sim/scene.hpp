// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radbev/geometry/geometry.hpp"
#include "radbev/numerics/tensor.hpp"
#include "radbev/radar_stream/point_cloud.hpp"

namespace radbev {

// Class ids: 0 is free space.
inline constexpr int kNumClasses = 3;
inline constexpr int kClassVehicle = 1;
inline constexpr int kClassPedestrian = 2;

/// Axis-aligned box resting anywhere in the ego frame.
struct SceneObject {
  Vec3 center;
  Vec3 half_extent;
  int class_id = kClassVehicle;
  double rcs = 10.0;  // dBsm
  double vx = 0.0, vy = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
  double clutter_rate = 5.0;              // Poisson mean per sweep
  double range_sigma = 0.15;              // metres
  double azimuth_sigma = 0.5 * 0.0174532925199432957692;  // radians
  std::size_t sweeps = 7;
  double sweep_dt = 0.075;                // seconds between sweeps
  double ego_vx = 0.0, ego_vy = 0.0;      // ego velocity, m/s
  double returns_per_object = 3.0;        // mean extra returns beyond the guaranteed one

  // Throws SpecError on zero-volume objects, centres outside the grid,
  // unknown classes or an invalid sweep count.
  void validate(const BevGrid& grid) const;
};

/// Default desk-scale sensor setup: two cameras (front and rear) at 1.5 m.
struct SensorSetup {
  CameraRig rig;
  BevGrid grid;
  DepthBins bins;
  std::size_t radar_stride = 4;  // image columns per frustum column

  static SensorSetup desk();
  std::size_t frustum_cols(std::size_t cam) const;
  void validate() const;
};

struct GroundTruth {
  Tensor bev_class;                 // [X, Y] labels as doubles
  std::vector<Tensor> depth_image;  // per camera [H, W]; 0 where no object
  std::vector<Tensor> heatmap;      // per camera [H, W]
  std::vector<Tensor> object_id;    // per camera [H, W]; -1 where no object

  std::vector<int> labels() const;  // bev_class flattened as q = i*Y + j
};

// Noise-free origin of a simulated radar return.
struct RadarTruth {
  int object = -1;  // -1 for clutter
  Vec3 clean;       // sampled surface point before noise, in the sweep's ego frame
};

struct SceneFrame {
  Tensor images;  // [N, 3, H, W] in [0, 1]
  std::vector<RadarPointCloud> sweeps;  // sweeps[k] in its own ego frame, sweep index k
  std::vector<EgoPose> poses;           // sweep frame -> current frame
  std::vector<std::vector<RadarTruth>> truth;  // parallel to sweeps[k].points
  GroundTruth gt;
};

SceneFrame generate_scene(const SceneSpec& spec, const SensorSetup& setup);

// Two objects on one ray from camera 0 at ranges d_near and d_far.
// Throws SpecError unless d_min < d_near < d_far < d_max and GeometryError
// when the projected columns of the two boxes do not overlap.
SceneSpec same_ray_scenario(double d_near, double d_far, double azimuth, const SensorSetup& setup,
                            std::uint64_t seed = 0);

// Random scene with `n_objects` non-overlapping boxes visible to the rig.
SceneSpec random_scene(std::uint64_t seed, std::size_t n_objects, const SensorSetup& setup);

// Nearest surface hit of the ray origin + t*dir against the object boxes.
struct RayHit {
  double t = 0.0;
  int object = -1;
  int face = -1;  // 0/1: -x/+x, 2/3: -y/+y, 4/5: -z/+z
};
RayHit cast_ray(const std::vector<SceneObject>& objects, const Vec3& origin, const Vec3& dir);

std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);

// Writes scene.json, cam{n}.pgm, radar.csv (accumulated) and gt_bev.pgm.
void dump_fixture(const std::string& dir, const SceneSpec& spec, const SceneFrame& frame);

}  // namespace radbev
