// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "radbev/numerics/tape.hpp"

namespace radbev {

// Builds a single-element output from leaf variables, one per checked tensor.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckOptions {
  double eps = 1e-6;
  // Denominator floor: error = |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
  // Check at most this many evenly strided elements per tensor (0 = all).
  std::size_t max_elements_per_tensor = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Central-difference check of the tape gradient of `f` with respect to
/// every tensor in `params`. The tensors are perturbed in place and
/// restored. Throws NumericError when f or a gradient is not finite.
GradCheckReport grad_check_report(const ScalarFn& f, const std::vector<Tensor*>& params,
                                  const GradCheckOptions& options = {});

double grad_check(const ScalarFn& f, const std::vector<Tensor*>& params, double eps);

// Builds a single-element output that reads learnable state via Tape::param.
using ParamFn = std::function<Var(Tape&)>;

/// Same check against Parameter::grad for functions of model parameters.
/// Existing gradients of `params` are cleared.
GradCheckReport grad_check_params(const ParamFn& f, const std::vector<Parameter*>& params,
                                  const GradCheckOptions& options = {});

}  // namespace radbev
