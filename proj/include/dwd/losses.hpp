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

// The three masked head losses and their running-mean weighted sum.
// Logit and prediction tensors are channel-first {C, H, W}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/tensor.hpp"
#include "dwd/types.hpp"

namespace dwd {

/// Mean categorical cross-entropy over the pixels where `mask` is nonzero
/// (all pixels when `mask` is empty), softmax over the channel axis in the
/// log-sum-exp form. Returns 0 for an empty mask. When `grad` is non-empty
/// it receives d(loss)/d(logits).
template <typename T>
double softmax_cross_entropy(std::span<const T> logits, int channels, std::span<const int> target,
                             std::span<const std::uint8_t> mask, std::span<T> grad = {}) {
  const std::size_t pixels = target.size();
  if (logits.size() != pixels * static_cast<std::size_t>(channels)) {
    throw ValidationError("logits do not match target size");
  }
  if (!mask.empty() && mask.size() != pixels) throw ValidationError("mask does not match target size");
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), T{0});

  std::size_t count = 0;
  for (std::size_t p = 0; p < pixels; ++p) count += mask.empty() || mask[p] ? 1 : 0;
  if (count == 0) return 0.0;

  const double inv = 1.0 / static_cast<double>(count);
  double total = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!mask.empty() && !mask[p]) continue;
    const int t = target[p];
    if (t < 0 || t >= channels) throw ValidationError("target index out of channel range");
    double peak = logits[p];
    for (int c = 1; c < channels; ++c) peak = std::max(peak, static_cast<double>(logits[c * pixels + p]));
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) sum += std::exp(static_cast<double>(logits[c * pixels + p]) - peak);
    const double lse = peak + std::log(sum);
    total += lse - static_cast<double>(logits[t * pixels + p]);
    if (!grad.empty()) {
      for (int c = 0; c < channels; ++c) {
        const double prob = std::exp(static_cast<double>(logits[c * pixels + p]) - lse);
        grad[c * pixels + p] = static_cast<T>((prob - (c == t ? 1.0 : 0.0)) * inv);
      }
    }
  }
  return total * inv;
}

/// Mean squared difference over masked pixels and all channels; 0 on an
/// empty mask.
template <typename T>
double masked_mse(std::span<const T> pred, std::span<const T> target, int channels,
                  std::span<const std::uint8_t> mask, std::span<T> grad = {}) {
  if (pred.size() != target.size()) throw ValidationError("prediction and target sizes differ");
  const std::size_t pixels = pred.size() / static_cast<std::size_t>(channels);
  if (!mask.empty() && mask.size() != pixels) throw ValidationError("mask does not match prediction");
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), T{0});

  std::size_t count = 0;
  for (std::size_t p = 0; p < pixels; ++p) count += mask.empty() || mask[p] ? 1 : 0;
  if (count == 0) return 0.0;

  const double inv = 1.0 / (static_cast<double>(count) * channels);
  double total = 0.0;
  for (int c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < pixels; ++p) {
      if (!mask.empty() && !mask[p]) continue;
      const std::size_t k = c * pixels + p;
      const double diff = static_cast<double>(pred[k]) - static_cast<double>(target[k]);
      total += diff * diff;
      if (!grad.empty()) grad[k] = static_cast<T>(2.0 * diff * inv);
    }
  }
  return total * inv;
}

// Map-to-target conversions shared by the loss wrappers and training.

inline std::vector<int> energy_targets(const QuantizedEnergyMap& q) {
  std::vector<int> out(q.pixels());
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) out[static_cast<std::size_t>(i) * q.cols() + j] = q.level(i, j);
  }
  return out;
}

inline std::vector<int> class_targets(const ClassMap& classes) {
  return std::vector<int>(classes.data().begin(), classes.data().end());
}

/// 1 where the ground-truth energy is positive.
inline std::vector<std::uint8_t> foreground_mask(const EnergyMap& energy) {
  std::vector<std::uint8_t> out(energy.pixels());
  auto e = energy.data();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = e[k] > 0 ? 1 : 0;
  return out;
}

/// BBoxMap (channel last) as a {2, H, W} tensor.
template <typename T>
Tensor<T> bbox_tensor(const BBoxMap& boxes) {
  Tensor<T> t({2, boxes.rows(), boxes.cols()});
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < boxes.rows(); ++i) {
      for (int j = 0; j < boxes.cols(); ++j) t.at(c, i, j) = static_cast<T>(boxes(i, j, c));
    }
  }
  return t;
}

namespace detail {
template <typename T>
void check_head(const Tensor<T>& t, int channels, int rows, int cols, const char* what) {
  if (t.rank() != 3 || (channels > 0 && t.dim(0) != channels) || t.dim(1) != rows || t.dim(2) != cols) {
    throw ValidationError(std::string(what) + " shape " + shape_string(t.shape()) +
                          " does not match target " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
}
}  // namespace detail

/// Cross-entropy between predicted energy logits {E_max+1, H, W} and the
/// one-hot energy target, averaged over every pixel.
template <typename T>
double energy_loss(const Tensor<T>& logits, const QuantizedEnergyMap& target) {
  detail::check_head(logits, target.bins(), target.rows(), target.cols(), "energy logits");
  const auto t = energy_targets(target);
  return softmax_cross_entropy<T>(logits.span(), target.bins(), t, {});
}

/// Cross-entropy of class logits {K, H, W}, averaged over ground-truth
/// foreground pixels only.
template <typename T>
double class_loss(const Tensor<T>& logits, const ClassMap& target, const EnergyMap& mask) {
  detail::check_head(logits, 0, target.rows(), target.cols(), "class logits");
  if (!target.same_grid(mask)) throw ValidationError("class target and mask sizes differ");
  const auto t = class_targets(target);
  const auto m = foreground_mask(mask);
  return softmax_cross_entropy<T>(logits.span(), logits.dim(0), t, m);
}

/// Squared error of box predictions {2, H, W}, averaged over foreground
/// pixels and both channels.
template <typename T>
double bbox_loss(const Tensor<T>& pred, const BBoxMap& target, const EnergyMap& mask) {
  detail::check_head(pred, 2, target.rows(), target.cols(), "bbox prediction");
  if (!target.same_grid(mask)) throw ValidationError("bbox target and mask sizes differ");
  const auto t = bbox_tensor<T>(target);
  const auto m = foreground_mask(mask);
  return masked_mse<T>(pred.span(), t.span(), 2, m);
}

/// Exponential moving averages of the three loss magnitudes.
struct RunningMeans {
  double v_e = 0.0;
  double v_c = 0.0;
  double v_b = 0.0;
  double momentum = 0.99;
  bool initialized = false;
};

/// w1 * le / v_e + w2 * lc / v_c + w3 * lb / v_b. Terms with zero weight
/// are skipped, so their mean may be zero.
inline double total_loss(double le, double lc, double lb, const RunningMeans& means,
                         const DwdConfig& cfg) {
  if (!means.initialized) throw NumericError("running means used before the first update");
  double total = 0.0;
  const double terms[3][3] = {{cfg.w1, le, means.v_e}, {cfg.w2, lc, means.v_c}, {cfg.w3, lb, means.v_b}};
  for (const auto& [w, loss, mean] : terms) {
    if (w == 0.0) continue;
    if (!(mean != 0.0)) throw NumericError("running mean of a weighted loss is zero");
    total += w * loss / mean;
  }
  return total;
}

/// v <- momentum * v + (1 - momentum) * loss; the first call copies the losses.
inline RunningMeans update_means(RunningMeans means, double le, double lc, double lb) {
  if (!means.initialized) {
    means.v_e = le;
    means.v_c = lc;
    means.v_b = lb;
    means.initialized = true;
    return means;
  }
  const double m = means.momentum;
  means.v_e = m * means.v_e + (1.0 - m) * le;
  means.v_c = m * means.v_c + (1.0 - m) * lc;
  means.v_b = m * means.v_b + (1.0 - m) * lb;
  return means;
}

}  // namespace dwd
