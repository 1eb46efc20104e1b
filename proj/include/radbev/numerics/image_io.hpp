// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radbev/numerics/tensor.hpp"

namespace radbev {

struct GrayImage {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Linear map of [lo, hi] onto 0..255 with clamping.
GrayImage to_gray(const Tensor& map, double lo, double hi);
// Same, with lo/hi taken from the map's range (constant maps become 0).
GrayImage to_gray_autoscale(const Tensor& map);

// Binary PGM (P5, maxval 255).
void write_pgm(const std::string& path, const GrayImage& image);
GrayImage read_pgm(const std::string& path);

}  // namespace radbev
