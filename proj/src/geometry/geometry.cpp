// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/geometry/geometry.hpp"

#include <cmath>
#include <numbers>

#include "radbev/errors.hpp"

namespace radbev {

Vec3 Camera::to_camera(const Vec3& p) const {
  const auto& r = rotation;
  return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation[0],
          r[3] * p.x + r[4] * p.y + r[5] * p.z + translation[1],
          r[6] * p.x + r[7] * p.y + r[8] * p.z + translation[2]};
}

Vec3 Camera::to_ego(const Vec3& c) const {
  const auto& r = rotation;
  const double x = c.x - translation[0], y = c.y - translation[1], z = c.z - translation[2];
  return {r[0] * x + r[3] * y + r[6] * z, r[1] * x + r[4] * y + r[7] * z, r[2] * x + r[5] * y + r[8] * z};
}

Vec3 Camera::center() const { return to_ego({0.0, 0.0, 0.0}); }

Camera Camera::looking_at_yaw(double yaw, const Vec3& position, std::size_t height, std::size_t width,
                              double hfov_rad) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.cx = (static_cast<double>(width) - 1.0) / 2.0;
  cam.cy = (static_cast<double>(height) - 1.0) / 2.0;
  cam.fx = (static_cast<double>(width) / 2.0) / std::tan(hfov_rad / 2.0);
  cam.fy = cam.fx;
  const double c = std::cos(yaw), s = std::sin(yaw);
  // Rows: camera x (right), y (down), z (forward) expressed in ego axes.
  cam.rotation = {s, -c, 0.0, 0.0, 0.0, -1.0, c, s, 0.0};
  const auto& r = cam.rotation;
  cam.translation = {-(r[0] * position.x + r[1] * position.y + r[2] * position.z),
                     -(r[3] * position.x + r[4] * position.y + r[5] * position.z),
                     -(r[6] * position.x + r[7] * position.y + r[8] * position.z)};
  return cam;
}

void CameraRig::validate() const {
  if (cameras.empty()) throw GeometryError("rig: no cameras");
  for (std::size_t n = 0; n < cameras.size(); ++n) {
    const Camera& c = cameras[n];
    const std::string tag = "rig: camera " + std::to_string(n);
    if (!(c.fx > 0.0) || !(c.fy > 0.0)) throw GeometryError(tag + " has non-positive focal length");
    if (c.width == 0 || c.height == 0) throw GeometryError(tag + " has empty image size");
    if (!(c.cx > 0.0 && c.cx < static_cast<double>(c.width)) ||
        !(c.cy > 0.0 && c.cy < static_cast<double>(c.height))) {
      throw GeometryError(tag + " principal point outside the image");
    }
    const auto& r = c.rotation;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
        if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-9) throw GeometryError(tag + " rotation is not orthonormal");
      }
    }
  }
}

CameraRig CameraRig::ring(std::size_t n, std::size_t height, std::size_t width, double hfov_rad) {
  CameraRig rig;
  for (std::size_t k = 0; k < n; ++k) {
    const double yaw = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    rig.cameras.push_back(Camera::looking_at_yaw(yaw, {0.0, 0.0, 1.5}, height, width, hfov_rad));
  }
  return rig;
}

std::pair<double, double> BevGrid::cell_center(std::size_t i, std::size_t j) const {
  const double cell = cell_size();
  const double y_half = cell * static_cast<double>(y_cells) / 2.0;
  return {(static_cast<double>(i) + 0.5) * cell - extent, (static_cast<double>(j) + 0.5) * cell - y_half};
}

std::optional<std::pair<std::size_t, std::size_t>> BevGrid::cell_of(double x, double y) const {
  const double cell = cell_size();
  const double y_half = cell * static_cast<double>(y_cells) / 2.0;
  const double fi = std::floor((x + extent) / cell);
  const double fj = std::floor((y + y_half) / cell);
  if (fi < 0 || fj < 0 || fi >= static_cast<double>(x_cells) || fj >= static_cast<double>(y_cells)) {
    return std::nullopt;
  }
  return std::pair{static_cast<std::size_t>(fi), static_cast<std::size_t>(fj)};
}

void BevGrid::validate() const {
  if (x_cells < 2 || y_cells < 2) throw GeometryError("grid: need at least 2x2 cells");
  if (!(extent > 0.0)) throw GeometryError("grid: extent must be positive");
  if (z_anchors.empty()) throw GeometryError("grid: need at least one z anchor");
  for (std::size_t k = 1; k < z_anchors.size(); ++k) {
    if (!(z_anchors[k] > z_anchors[k - 1])) throw GeometryError("grid: z anchors must increase strictly");
  }
}

std::optional<std::size_t> DepthBins::bin_of(double depth) const {
  if (!(depth >= d_min && depth <= d_max)) return std::nullopt;
  const auto k = static_cast<std::size_t>(std::floor((depth - d_min) / width()));
  return std::min(k, count - 1);
}

void DepthBins::validate() const {
  if (!(d_min > 0.0 && d_min < d_max)) throw GeometryError("bins: need 0 < d_min < d_max");
  if (count < 2) throw GeometryError("bins: need at least 2 bins");
}

ImageProjection project_point(const Camera& cam, const Vec3& ego) {
  const Vec3 c = cam.to_camera(ego);
  ImageProjection p;
  p.depth = c.z;
  if (c.z > kNearClip) {
    p.u = cam.fx * c.x / c.z + cam.cx;
    p.v = cam.fy * c.y / c.z + cam.cy;
    p.visible = p.u >= 0.0 && p.u <= static_cast<double>(cam.width) - 1.0 && p.v >= 0.0 &&
                p.v <= static_cast<double>(cam.height) - 1.0;
  } else {
    // Behind or too close to the camera: coordinates are meaningless.
    p.u = -1.0;
    p.v = -1.0;
  }
  return p;
}

std::vector<ImageProjection> project_to_image(std::span<const Vec3> points, const CameraRig& rig, std::size_t cam) {
  if (cam >= rig.size()) throw GeometryError("project_to_image: camera index out of range");
  std::vector<ImageProjection> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(project_point(rig.cameras[cam], p));
  return out;
}

FrustumProjection project_point_to_frustum(const Camera& cam, const Vec3& ego, const DepthBins& bins) {
  const ImageProjection ip = project_point(cam, ego);
  FrustumProjection fp;
  fp.u = ip.u;
  fp.d_idx = bins.continuous_index(ip.depth);
  fp.visible = ip.depth > kNearClip && ip.depth >= bins.d_min && ip.depth <= bins.d_max && ip.u >= 0.0 &&
               ip.u <= static_cast<double>(cam.width) - 1.0;
  return fp;
}

std::vector<FrustumProjection> project_to_frustum(std::span<const Vec3> points, const CameraRig& rig,
                                                  std::size_t cam, const DepthBins& bins) {
  if (cam >= rig.size()) throw GeometryError("project_to_frustum: camera index out of range");
  std::vector<FrustumProjection> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(project_point_to_frustum(rig.cameras[cam], p, bins));
  return out;
}

Vec3 unproject(const Camera& cam, double u, double v, double depth) {
  const Vec3 c{(u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth};
  return cam.to_ego(c);
}

Tensor pillar_reference_points(const BevGrid& grid) {
  const std::size_t nz = grid.z_anchors.size();
  Tensor out({grid.cells(), nz, 3});
  for (std::size_t i = 0; i < grid.x_cells; ++i) {
    for (std::size_t j = 0; j < grid.y_cells; ++j) {
      const auto [x, y] = grid.cell_center(i, j);
      const std::size_t q = grid.index(i, j);
      for (std::size_t k = 0; k < nz; ++k) {
        out[(q * nz + k) * 3 + 0] = x;
        out[(q * nz + k) * 3 + 1] = y;
        out[(q * nz + k) * 3 + 2] = grid.z_anchors[k];
      }
    }
  }
  return out;
}

}  // namespace radbev
