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

// Value types shared by every stage of the pipeline. Coordinates are
// (i, j) = (row, column) with the origin at the top-left pixel.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dwd/error.hpp"

namespace dwd {

/// Dense row-major H x W x D grid (channel last).
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int rows, int cols, int depth = 1, T fill = T{})
      : rows_(rows), cols_(cols), depth_(depth) {
    if (rows < 0 || cols < 0 || depth < 1) {
      throw ValidationError("raster dimensions must be non-negative with depth >= 1");
    }
    data_.assign(static_cast<std::size_t>(rows) * cols * depth, fill);
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int depth() const noexcept { return depth_; }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int i, int j) const noexcept { return i >= 0 && j >= 0 && i < rows_ && j < cols_; }
  bool same_grid(int rows, int cols) const noexcept { return rows_ == rows && cols_ == cols; }
  template <typename U>
  bool same_grid(const Raster<U>& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  T& operator()(int i, int j, int k = 0) noexcept { return data_[index(i, j, k)]; }
  const T& operator()(int i, int j, int k = 0) const noexcept { return data_[index(i, j, k)]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(i) * cols_ + j) * depth_ + k;
  }

  int rows_ = 0;
  int cols_ = 0;
  int depth_ = 1;
  std::vector<T> data_;
};

/// Conical energy surface, values in [0, E_max].
struct EnergyMap : Raster<double> {
  EnergyMap() = default;
  EnergyMap(int rows, int cols) : Raster<double>(rows, cols, 1, 0.0) {}
  explicit EnergyMap(Raster<double> r) : Raster<double>(std::move(r)) {}
  friend bool operator==(const EnergyMap&, const EnergyMap&) = default;
};

/// One-hot energy levels, depth E_max + 1 (bin 0 is background).
struct QuantizedEnergyMap : Raster<std::uint8_t> {
  QuantizedEnergyMap() = default;
  QuantizedEnergyMap(int rows, int cols, int bins) : Raster<std::uint8_t>(rows, cols, bins, 0) {}
  explicit QuantizedEnergyMap(Raster<std::uint8_t> r) : Raster<std::uint8_t>(std::move(r)) {}
  friend bool operator==(const QuantizedEnergyMap&, const QuantizedEnergyMap&) = default;

  int bins() const noexcept { return depth(); }
  /// Index of the hot bin at (i, j).
  int level(int i, int j) const noexcept {
    for (int k = 0; k < depth(); ++k) {
      if ((*this)(i, j, k) != 0) return k;
    }
    return 0;
  }
};

/// Per-pixel class id; 0 is background.
struct ClassMap : Raster<std::int32_t> {
  ClassMap() = default;
  ClassMap(int rows, int cols) : Raster<std::int32_t>(rows, cols, 1, 0) {}
  explicit ClassMap(Raster<std::int32_t> r) : Raster<std::int32_t>(std::move(r)) {}
  friend bool operator==(const ClassMap&, const ClassMap&) = default;
};

/// Per-pixel (width, height) in pixels, depth 2.
struct BBoxMap : Raster<double> {
  BBoxMap() = default;
  BBoxMap(int rows, int cols) : Raster<double>(rows, cols, 2, 0.0) {}
  explicit BBoxMap(Raster<double> r) : Raster<double>(std::move(r)) {}
  friend bool operator==(const BBoxMap&, const BBoxMap&) = default;
};

/// 0/1 foreground mask.
struct BinaryMask : Raster<std::uint8_t> {
  BinaryMask() = default;
  BinaryMask(int rows, int cols) : Raster<std::uint8_t>(rows, cols, 1, 0) {}
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// One ground-truth symbol.
struct Annotation {
  int class_id = 1;
  double center_i = 0.0;
  double center_j = 0.0;
  double width = 1.0;
  double height = 1.0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// One decoded object.
struct Detection {
  int class_id = 0;
  double center_i = 0.0;
  double center_j = 0.0;
  double width = 0.0;
  double height = 0.0;
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Grayscale page, intensities in [0, 1] (1 = paper, 0 = ink).
struct PageImage {
  Raster<double> pixels;
  double interline = 10.0;

  PageImage() = default;
  PageImage(int rows, int cols, double interline_px, double fill = 1.0)
      : pixels(rows, cols, 1, fill), interline(interline_px) {}

  int rows() const noexcept { return pixels.rows(); }
  int cols() const noexcept { return pixels.cols(); }
  friend bool operator==(const PageImage&, const PageImage&) = default;
};

/// Hyperparameters of encoding, decoding and loss weighting.
struct DwdConfig {
  int e_max = 8;
  int radius = 3;
  int cut_level = 4;  // ceil(e_max / 2)
  int num_classes = 5;
  double w1 = 1.0;
  double w2 = 1.0;
  double w3 = 1.0;
  double learning_rate = 0.001;
  double decay_rate = 0.995;
  double mean_momentum = 0.99;
  int crop_size = 128;
  double target_interline = 10.0;

  int energy_bins() const noexcept { return e_max + 1; }
  int class_channels() const noexcept { return num_classes + 1; }

  void validate() const {
    if (e_max < 1) throw ValidationError("e_max must be >= 1");
    if (radius < 1) throw ValidationError("radius must be >= 1");
    if (cut_level < 1 || cut_level > e_max) {
      throw ValidationError("cut_level " + std::to_string(cut_level) + " outside [1, " +
                            std::to_string(e_max) + "]");
    }
    if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
    if (w1 < 0 || w2 < 0 || w3 < 0) throw ValidationError("loss weights must be >= 0");
    if (w1 + w2 + w3 <= 0) throw ValidationError("loss weights must not all be zero");
    if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
    if (!(decay_rate > 0 && decay_rate < 1)) throw ValidationError("decay_rate must be in (0,1)");
    if (!(mean_momentum > 0 && mean_momentum < 1)) {
      throw ValidationError("mean_momentum must be in (0,1)");
    }
    if (crop_size < 1) throw ValidationError("crop_size must be >= 1");
    if (!(target_interline > 0)) throw ValidationError("target_interline must be > 0");
  }
};

inline void validate_annotation(const Annotation& a) {
  if (a.class_id < 1) {
    throw ValidationError("class_id must be >= 1 (0 is background), got " +
                          std::to_string(a.class_id));
  }
  if (!(a.width > 0) || !(a.height > 0)) throw ValidationError("box width and height must be > 0");
  if (!std::isfinite(a.center_i) || !std::isfinite(a.center_j)) {
    throw ValidationError("annotation center must be finite");
  }
}

inline void validate_annotation(const Annotation& a, int rows, int cols) {
  validate_annotation(a);
  if (a.center_i < 0 || a.center_i >= rows || a.center_j < 0 || a.center_j >= cols) {
    throw ValidationError("annotation center (" + std::to_string(a.center_i) + ", " +
                          std::to_string(a.center_j) + ") outside " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " page");
  }
}

}  // namespace dwd
