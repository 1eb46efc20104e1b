// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace radbev {

// Worker count used by kernels that split independent output elements.
// Defaults to 1; results never depend on this value.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
// visited exactly once; bodies must only write outputs owned by their range.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace radbev
