// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/numerics/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "radbev/errors.hpp"

namespace radbev {

GrayImage to_gray(const Tensor& map, double lo, double hi) {
  if (map.rank() != 2) throw DimensionError("to_gray: expected [H, W], got " + shape_str(map.shape()));
  GrayImage img{map.dim(0), map.dim(1), std::vector<std::uint8_t>(map.size(), 0)};
  const double span = hi - lo;
  if (!(span > 0.0)) return img;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double t = std::clamp((map[i] - lo) / span, 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(t * 255.0));
  }
  return img;
}

GrayImage to_gray_autoscale(const Tensor& map) {
  if (map.empty()) return to_gray(map, 0.0, 1.0);
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  return to_gray(map, *lo, *hi);
}

void write_pgm(const std::string& path, const GrayImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!os) throw DataError("failed writing " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  std::string magic;
  GrayImage img;
  int maxval = 0;
  is >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255 || !is) throw DataError(path + ": not an 8-bit binary PGM");
  is.get();
  img.pixels.resize(img.width * img.height);
  is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!is) throw DataError(path + ": truncated pixel data");
  return img;
}

}  // namespace radbev
