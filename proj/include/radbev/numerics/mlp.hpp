// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "radbev/numerics/rng.hpp"
#include "radbev/numerics/tape.hpp"

namespace radbev {

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

enum class Activation { relu, identity };

struct MlpLayer {
  Parameter weight;  // [in, out]
  Parameter bias;    // [out]
  Activation activation = Activation::identity;
};

/// Row-wise multilayer perceptron: x[rows, in] -> [rows, out].
struct MlpParams {
  std::vector<MlpLayer> layers;

  // dims = {in, hidden..., out}; one activation per layer.
  static MlpParams make(const std::string& name, const std::vector<std::size_t>& dims,
                        const std::vector<Activation>& activations, Rng& rng);

  // Throws DimensionError when adjacent layer sizes do not chain.
  void validate() const;

  std::size_t in_dim() const;
  std::size_t out_dim() const;

  Var forward(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out);
};

}  // namespace radbev
