// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/radar_stream/point_cloud.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "radbev/errors.hpp"

namespace radbev {

void RadarPointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].sweep < 0 || points[i].sweep > kMaxSweepIndex) {
      throw DataError("radar point " + std::to_string(i) + ": sweep index " + std::to_string(points[i].sweep) +
                      " outside [0, 6]");
    }
  }
}

void write_radar_csv(std::ostream& os, const RadarPointCloud& cloud) {
  os << "x,y,z,rcs,vx,vy,sweep\n";
  os << std::setprecision(17);
  for (const RadarPoint& p : cloud.points) {
    os << p.x << ',' << p.y << ',' << p.z << ',' << p.rcs << ',' << p.vx << ',' << p.vy << ',' << p.sweep << '\n';
  }
}

RadarPointCloud read_radar_csv(std::istream& is) {
  RadarPointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("x,", 0) == 0) continue;
    double f[6];
    int sweep = 0;
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 7; ++k) {
      std::from_chars_result r = k < 6 ? std::from_chars(cur, end, f[k]) : std::from_chars(cur, end, sweep);
      if (r.ec != std::errc{}) {
        throw DataError("radar csv line " + std::to_string(line_no) + ": expected 7 numeric fields");
      }
      cur = r.ptr;
      if (k < 6) {
        if (cur == end || *cur != ',') throw DataError("radar csv line " + std::to_string(line_no) + ": missing field");
        ++cur;
      }
    }
    if (cur != end) throw DataError("radar csv line " + std::to_string(line_no) + ": trailing characters");
    cloud.points.push_back({f[0], f[1], f[2], f[3], f[4], f[5], sweep});
  }
  cloud.validate();
  return cloud;
}

void save_radar_csv(const std::string& path, const RadarPointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_radar_csv(os, cloud);
}

RadarPointCloud load_radar_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  return read_radar_csv(is);
}

}  // namespace radbev
