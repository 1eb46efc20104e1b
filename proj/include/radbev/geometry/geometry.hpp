// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "radbev/numerics/tensor.hpp"

namespace radbev {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Minimum camera-frame depth for a point to count as in front of a camera.
inline constexpr double kNearClip = 0.1;

/// Pinhole camera. Camera frame: x right, y down, z forward.
/// Extrinsic maps ego to camera: p_cam = R * p_ego + t.
struct Camera {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> translation{0, 0, 0};
  std::size_t height = 0, width = 0;

  Vec3 to_camera(const Vec3& ego) const;
  Vec3 to_ego(const Vec3& cam) const;
  // Camera centre in the ego frame.
  Vec3 center() const;

  // Camera at `position` looking horizontally along ego azimuth `yaw`
  // (0 = +x, counter-clockwise), with the given horizontal field of view.
  static Camera looking_at_yaw(double yaw, const Vec3& position, std::size_t height, std::size_t width,
                               double hfov_rad);
};

struct CameraRig {
  std::vector<Camera> cameras;

  std::size_t size() const noexcept { return cameras.size(); }
  // Throws GeometryError on non-positive focal lengths, principal points
  // outside the image, or a rotation that is not orthonormal within 1e-9.
  void validate() const;

  // N cameras evenly spaced in yaw starting at 0, mounted 1.5 m above the
  // ego origin.
  static CameraRig ring(std::size_t n, std::size_t height, std::size_t width, double hfov_rad);
};

struct BevGrid {
  std::size_t x_cells = 48, y_cells = 48;
  double extent = 24.0;  // metric half-range along x
  std::vector<double> z_anchors{-1.0, 1.0 / 3.0, 5.0 / 3.0, 3.0};

  double cell_size() const { return 2.0 * extent / static_cast<double>(x_cells); }
  std::size_t cells() const { return x_cells * y_cells; }
  std::size_t index(std::size_t i, std::size_t j) const { return i * y_cells + j; }
  // Metric centre of cell (i, j); i runs along x, j along y.
  std::pair<double, double> cell_center(std::size_t i, std::size_t j) const;
  // Cell containing (x, y), if inside the grid.
  std::optional<std::pair<std::size_t, std::size_t>> cell_of(double x, double y) const;

  void validate() const;
};

struct DepthBins {
  double d_min = 0.5, d_max = 40.0;
  std::size_t count = 32;

  double width() const { return (d_max - d_min) / static_cast<double>(count); }
  double center(std::size_t k) const { return d_min + (static_cast<double>(k) + 0.5) * width(); }
  // Continuous bin coordinate; bin k's centre maps to k.
  double continuous_index(double depth) const { return (depth - d_min) / width() - 0.5; }
  // floor((d - d_min) / width) when d lies in [d_min, d_max]; d_max maps to the last bin.
  std::optional<std::size_t> bin_of(double depth) const;

  void validate() const;
};

struct ImageProjection {
  double u = 0.0, v = 0.0, depth = 0.0;
  bool visible = false;
};

struct FrustumProjection {
  double u = 0.0, d_idx = 0.0;
  bool visible = false;
};

ImageProjection project_point(const Camera& cam, const Vec3& ego);
std::vector<ImageProjection> project_to_image(std::span<const Vec3> points, const CameraRig& rig, std::size_t cam);

FrustumProjection project_point_to_frustum(const Camera& cam, const Vec3& ego, const DepthBins& bins);
std::vector<FrustumProjection> project_to_frustum(std::span<const Vec3> points, const CameraRig& rig,
                                                  std::size_t cam, const DepthBins& bins);

// Ego-frame point at pixel (u, v) and camera depth d.
Vec3 unproject(const Camera& cam, double u, double v, double depth);

// [X*Y, n_z, 3]: for cell q = i*Y + j, the points (x_i, y_j, z_k).
Tensor pillar_reference_points(const BevGrid& grid);

}  // namespace radbev
