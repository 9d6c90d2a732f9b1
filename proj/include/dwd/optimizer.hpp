// Copyright 2026 The DWD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/tensor.hpp"

namespace dwd {

/// Squared-gradient accumulators for RMSProp, one per parameter tensor.
template <typename T>
struct OptimizerState {
  std::vector<Tensor<T>> accumulators;
  double learning_rate = 0.001;
  double decay_rate = 0.995;
  double epsilon = 1e-8;

  OptimizerState() = default;
  OptimizerState(const std::vector<Tensor<T>>& params, double lr, double decay)
      : learning_rate(lr), decay_rate(decay) {
    for (const auto& p : params) accumulators.emplace_back(p.shape());
  }
};

/// acc <- decay * acc + (1 - decay) * g^2;  p <- p - lr * g / sqrt(acc + eps).
template <typename T>
void rmsprop_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads,
                  OptimizerState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.accumulators.size()) {
    throw ValidationError("rmsprop: parameter, gradient and state counts differ");
  }
  const double decay = state.decay_rate;
  const double lr = state.learning_rate;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const auto& g = grads[k];
    auto& acc = state.accumulators[k];
    if (!p.same_shape(g) || !p.same_shape(acc)) {
      throw ValidationError("rmsprop: shape mismatch at parameter " + std::to_string(k));
    }
    for (std::size_t n = 0; n < p.size(); ++n) {
      const double gn = static_cast<double>(g[n]);
      const double a = decay * static_cast<double>(acc[n]) + (1.0 - decay) * gn * gn;
      acc[n] = static_cast<T>(a);
      p[n] = static_cast<T>(static_cast<double>(p[n]) - lr * gn / std::sqrt(a + state.epsilon));
    }
  }
}

}  // namespace dwd
