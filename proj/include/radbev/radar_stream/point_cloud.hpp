// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace radbev {

inline constexpr int kMaxSweepIndex = 6;

struct RadarPoint {
  double x = 0.0, y = 0.0, z = 0.0;  // ego frame, metres
  double rcs = 0.0;                  // dBsm
  double vx = 0.0, vy = 0.0;         // m/s
  int sweep = 0;                     // 0 = current, 1..6 = previous
};

struct RadarPointCloud {
  std::vector<RadarPoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  // Throws DataError when a sweep index lies outside [0, 6].
  void validate() const;
};

/// Planar ego pose of a past sweep relative to the current ego frame:
/// p_current = Rz(yaw) * p_sweep + (x, y, 0).
struct EgoPose {
  double x = 0.0, y = 0.0, yaw = 0.0;
};

// One CSV row per point: x,y,z,rcs,vx,vy,sweep, with a header line.
void write_radar_csv(std::ostream& os, const RadarPointCloud& cloud);
RadarPointCloud read_radar_csv(std::istream& is);
void save_radar_csv(const std::string& path, const RadarPointCloud& cloud);
RadarPointCloud load_radar_csv(const std::string& path);

}  // namespace radbev
