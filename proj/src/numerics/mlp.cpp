// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/numerics/mlp.hpp"

#include <cmath>

#include "radbev/errors.hpp"
#include "radbev/numerics/ops.hpp"

namespace radbev {

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

MlpParams MlpParams::make(const std::string& name, const std::vector<std::size_t>& dims,
                          const std::vector<Activation>& activations, Rng& rng) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw DimensionError("mlp '" + name + "': need dims.size() - 1 activations");
  }
  MlpParams mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    MlpLayer layer;
    const std::string prefix = name + ".l" + std::to_string(i);
    layer.weight = Parameter(prefix + ".weight", uniform_init({dims[i], dims[i + 1]}, dims[i], rng));
    layer.bias = Parameter(prefix + ".bias", Tensor({dims[i + 1]}), false);
    layer.activation = activations[i];
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

void MlpParams::validate() const {
  if (layers.empty()) throw DimensionError("mlp: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Tensor& w = layers[i].weight.value;
    if (w.rank() != 2 || layers[i].bias.value.size() != w.dim(1)) {
      throw DimensionError("mlp: layer " + std::to_string(i) + " weight/bias mismatch");
    }
    if (i + 1 < layers.size() && w.dim(1) != layers[i + 1].weight.value.dim(0)) {
      throw DimensionError("mlp: layer " + std::to_string(i) + " output does not feed layer " +
                           std::to_string(i + 1));
    }
  }
}

std::size_t MlpParams::in_dim() const { return layers.front().weight.value.dim(0); }
std::size_t MlpParams::out_dim() const { return layers.back().weight.value.dim(1); }

Var MlpParams::forward(Tape& tape, Var x) {
  for (MlpLayer& layer : layers) {
    x = ops::add_row_bias(ops::matmul(x, tape.param(layer.weight)), tape.param(layer.bias));
    if (layer.activation == Activation::relu) x = ops::relu(x);
  }
  return x;
}

void MlpParams::collect(std::vector<Parameter*>& out) {
  for (MlpLayer& layer : layers) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
}

}  // namespace radbev
