// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "radbev/numerics/tape.hpp"

namespace radbev {

// Binary tensor record: "BEVT", u32 rank, rank x u32 dims (little endian),
// then the payload as little-endian IEEE-754 f64.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// Checkpoint: u32 count, then per parameter u32 name length, name bytes and
// one tensor record.
void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params);
// Restores values by name; throws DataError on missing names or shape mismatch.
void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

}  // namespace radbev
