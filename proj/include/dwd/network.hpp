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

// Micro fully-convolutional network: a stride-1 backbone of same-padded
// convolutions with residual pairs, and three 1x1 extraction heads for the
// energy levels, classes and box dimensions.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dwd/autodiff.hpp"
#include "dwd/error.hpp"
#include "dwd/tensor.hpp"
#include "dwd/types.hpp"

namespace dwd {

struct ConvLayer {
  int kernel = 3;
  int in_channels = 32;
  int out_channels = 32;
  int dilation = 1;
  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct NetworkSpec {
  int input_channels = 1;
  std::vector<ConvLayer> layers;
  // (first, second): the input of layer `first` is added to the
  // pre-activation output of layer `second`.
  std::vector<std::pair<int, int>> residual_pairs;
  int energy_bins = 9;
  int class_channels = 6;
  int bbox_channels = 2;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;

  int feature_channels() const { return layers.empty() ? input_channels : layers.back().out_channels; }

  void validate() const {
    int channels = input_channels;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& l = layers[k];
      if (l.in_channels != channels) {
        throw ValidationError("layer " + std::to_string(k) + " expects " +
                              std::to_string(l.in_channels) + " channels, previous layer gives " +
                              std::to_string(channels));
      }
      if (l.kernel < 1 || l.kernel % 2 == 0) throw ValidationError("kernels must be odd");
      if (l.dilation < 1 || l.out_channels < 1) throw ValidationError("bad layer parameters");
      channels = l.out_channels;
    }
    for (std::size_t p = 0; p < residual_pairs.size(); ++p) {
      const auto [a, b] = residual_pairs[p];
      if (a < 0 || b <= a || b >= static_cast<int>(layers.size())) {
        throw ValidationError("residual pair out of range");
      }
      if (layers[a].in_channels != layers[b].out_channels) {
        throw ValidationError("residual pair channel mismatch");
      }
      for (std::size_t q = 0; q < p; ++q) {
        if (residual_pairs[q].second >= a) throw ValidationError("residual pairs must not overlap");
      }
    }
    if (energy_bins < 2 || class_channels < 2 || bbox_channels != 2) {
      throw ValidationError("head depths must be energy >= 2, class >= 2, bbox == 2");
    }
  }

  /// Stable text form; its hash tags checkpoints.
  std::string canonical() const {
    std::string s = "in=" + std::to_string(input_channels);
    for (const auto& l : layers) {
      s += ";conv" + std::to_string(l.kernel) + ":" + std::to_string(l.in_channels) + ">" +
           std::to_string(l.out_channels) + "@" + std::to_string(l.dilation);
    }
    for (const auto& [a, b] : residual_pairs) s += ";res" + std::to_string(a) + "-" + std::to_string(b);
    s += ";heads=" + std::to_string(energy_bins) + "," + std::to_string(class_channels) + "," +
         std::to_string(bbox_channels);
    return s;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  std::size_t parameter_count() const { return 2 * (layers.size() + 3); }
};

/// Six 3x3 layers, `width` channels, residual pairs (1,2) and (3,4).
inline NetworkSpec micro_fcn(const DwdConfig& cfg, int width = 32,
                             std::vector<int> dilations = {1, 1, 2, 2, 4, 4}) {
  NetworkSpec spec;
  int in = 1;
  for (int d : dilations) {
    spec.layers.push_back({3, in, width, d});
    in = width;
  }
  if (spec.layers.size() >= 5) spec.residual_pairs = {{1, 2}, {3, 4}};
  spec.energy_bins = cfg.energy_bins();
  spec.class_channels = cfg.class_channels();
  return spec;
}

/// Named architectures: "micro" (dilated, default), "micro-plain"
/// (dilation 1 throughout), "tiny" (two 8-channel layers, for tests).
inline NetworkSpec network_preset(const std::string& name, const DwdConfig& cfg) {
  if (name == "micro") return micro_fcn(cfg);
  if (name == "micro-plain") return micro_fcn(cfg, 32, {1, 1, 1, 1, 1, 1});
  if (name == "tiny") return micro_fcn(cfg, 8, {1, 2});
  throw ValidationError("unknown network preset '" + name + "'");
}

/// Per-head outputs of one forward pass, all {C, H, W}.
template <typename T>
struct HeadOutputs {
  Tensor<T> energy_logits;
  Tensor<T> class_logits;
  Tensor<T> boxes;
};

/// Network input {1, H, W}: ink density 1 - intensity, so padding and blank
/// paper are both zero.
template <typename T>
Tensor<T> image_tensor(const PageImage& page) {
  Tensor<T> t({1, page.rows(), page.cols()});
  auto src = page.pixels.data();
  for (std::size_t k = 0; k < src.size(); ++k) t[k] = static_cast<T>(1.0 - src[k]);
  return t;
}

template <typename T>
class Network {
 public:
  struct Graph {
    Var energy;
    Var classes;
    Var boxes;
    std::vector<Var> params;
  };

  Network() = default;
  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (const auto& l : spec_.layers) {
      params_.emplace_back(std::vector<int>{l.out_channels, l.in_channels, l.kernel, l.kernel});
      params_.emplace_back(std::vector<int>{l.out_channels});
    }
    const int f = spec_.feature_channels();
    for (int depth : {spec_.energy_bins, spec_.class_channels, spec_.bbox_channels}) {
      params_.emplace_back(std::vector<int>{depth, f, 1, 1});
      params_.emplace_back(std::vector<int>{depth});
    }
  }

  /// He-normal weights, zero biases.
  void init_he(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t p = 0; p < params_.size(); p += 2) {
      auto& w = params_[p];
      const int fan_in = w.dim(1) * w.dim(2) * w.dim(3);
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
      for (auto& v : w.storage()) v = static_cast<T>(normal(rng));
      params_[p + 1].fill(T{0});
    }
  }

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::vector<Tensor<T>>& parameters() noexcept { return params_; }
  const std::vector<Tensor<T>>& parameters() const noexcept { return params_; }

  /// Records the forward pass on `tape`; parameters become gradient leaves.
  Graph forward(Tape<T>& tape, const Tensor<T>& input) const {
    if (input.rank() != 3 || input.dim(0) != spec_.input_channels) {
      throw ValidationError("network input must be {" + std::to_string(spec_.input_channels) +
                            ", H, W}, got " + shape_string(input.shape()));
    }
    Graph g;
    for (const auto& p : params_) g.params.push_back(tape.parameter(p));
    Var h = tape.constant(input);
    Var skip;
    std::size_t pair = 0;
    for (std::size_t k = 0; k < spec_.layers.size(); ++k) {
      const bool opens = pair < spec_.residual_pairs.size() &&
                         spec_.residual_pairs[pair].first == static_cast<int>(k);
      if (opens) skip = h;
      Var z = tape.conv2d(h, g.params[2 * k], g.params[2 * k + 1], spec_.layers[k].dilation);
      if (pair < spec_.residual_pairs.size() && spec_.residual_pairs[pair].second == static_cast<int>(k)) {
        z = tape.add(z, skip);
        ++pair;
      }
      h = tape.relu(z);
    }
    const std::size_t head = 2 * spec_.layers.size();
    g.energy = tape.conv2d(h, g.params[head], g.params[head + 1]);
    g.classes = tape.conv2d(h, g.params[head + 2], g.params[head + 3]);
    g.boxes = tape.conv2d(h, g.params[head + 4], g.params[head + 5]);
    return g;
  }

  HeadOutputs<T> predict(const Tensor<T>& input) const {
    Tape<T> tape;
    const auto g = forward(tape, input);
    return {tape.value(g.energy), tape.value(g.classes), tape.value(g.boxes)};
  }

  HeadOutputs<T> predict(const PageImage& page) const { return predict(image_tensor<T>(page)); }

 private:
  NetworkSpec spec_;
  std::vector<Tensor<T>> params_;
};

// Prediction tensors to decoder maps.

/// Per-pixel argmax over energy bins (lowest bin on ties) as a scalar map.
template <typename T>
EnergyMap collapse_energy(const Tensor<T>& logits) {
  const int bins = logits.dim(0), rows = logits.dim(1), cols = logits.dim(2);
  EnergyMap e(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      int best = 0;
      for (int c = 1; c < bins; ++c) {
        if (logits.at(c, i, j) > logits.at(best, i, j)) best = c;
      }
      e(i, j) = best;
    }
  }
  return e;
}

template <typename T>
ClassMap argmax_classes(const Tensor<T>& logits) {
  const int channels = logits.dim(0), rows = logits.dim(1), cols = logits.dim(2);
  ClassMap m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      int best = 0;
      for (int c = 1; c < channels; ++c) {
        if (logits.at(c, i, j) > logits.at(best, i, j)) best = c;
      }
      m(i, j) = best;
    }
  }
  return m;
}

template <typename T>
BBoxMap bbox_map_from(const Tensor<T>& boxes) {
  BBoxMap m(boxes.dim(1), boxes.dim(2));
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) m(i, j, c) = static_cast<double>(boxes.at(c, i, j));
    }
  }
  return m;
}

/// Decoder-ready maps from raw head outputs.
struct PredictedMaps {
  EnergyMap energy;
  ClassMap classes;
  BBoxMap boxes;
};

template <typename T>
PredictedMaps to_maps(const HeadOutputs<T>& out) {
  return {collapse_energy(out.energy_logits), argmax_classes(out.class_logits), bbox_map_from(out.boxes)};
}

}  // namespace dwd
