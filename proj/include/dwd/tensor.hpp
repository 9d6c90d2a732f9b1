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

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dwd/error.hpp"

namespace dwd {

/// Dense row-major tensor of arbitrary rank. Feature maps are {C, H, W},
/// convolution kernels {out, in, k, k}, biases {out}, scalars {1}.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, T fill = T{}) : shape_(std::move(shape)) {
    for (int d : shape_) {
      if (d < 0) throw ValidationError("tensor dimensions must be non-negative");
    }
    data_.assign(count(shape_), fill);
  }
  Tensor(std::vector<int> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) throw ValidationError("tensor data does not match shape");
  }

  static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

  const std::vector<int>& shape() const noexcept { return shape_; }
  int dim(std::size_t k) const { return shape_.at(k); }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  std::size_t size() const noexcept { return data_.size(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t k) noexcept { return data_[k]; }
  const T& operator[](std::size_t k) const noexcept { return data_[k]; }

  // {C, H, W} accessor.
  T& at(int c, int i, int j) noexcept {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + i) * shape_[2] + j];
  }
  const T& at(int c, int i, int j) const noexcept {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + i) * shape_[2] + j];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  static std::size_t count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

inline std::string shape_string(const std::vector<int>& shape) {
  std::string s = "{";
  for (std::size_t k = 0; k < shape.size(); ++k) s += (k ? "," : "") + std::to_string(shape[k]);
  return s + "}";
}

}  // namespace dwd
