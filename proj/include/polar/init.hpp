#pragma once

#include <cmath>

#include "polar/rng.hpp"
#include "polar/tensor.hpp"

namespace polar {

// Glorot-uniform over [-limit, limit], limit = sqrt(6/(fan_in+fan_out))
inline Tensor glorot(int fan_in, int fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t = Tensor::zeros({fan_in, fan_out});
  for (double& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

inline Tensor uniform_init(std::vector<int> shape, double scale, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

}  // namespace polar
