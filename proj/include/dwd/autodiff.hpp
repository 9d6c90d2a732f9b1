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

// Minimal reverse-mode automatic differentiation over Tensor values. A Tape
// records every operation in creation order; backward() replays the
// recorded adjoint functions in reverse.

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/losses.hpp"
#include "dwd/tensor.hpp"

namespace dwd {

/// Handle to a node on a Tape.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
  bool valid() const noexcept { return index != static_cast<std::size_t>(-1); }
};

template <typename T>
class Tape {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Matrix>;
  using ConstMatMap = Eigen::Map<const Matrix>;

  Tape() = default;
  // Recorded adjoints capture `this`.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input that never receives a gradient.
  Var constant(Tensor<T> value) { return push(std::move(value), false); }
  /// Leaf whose gradient is accumulated by backward().
  Var parameter(Tensor<T> value) { return push(std::move(value), true); }

  const Tensor<T>& value(Var v) const { return node(v).value; }

  /// Gradient accumulated by the last backward(); a zero tensor for nodes
  /// the loss does not depend on.
  Tensor<T> grad(Var v) const {
    const auto& n = node(v);
    if (n.grad.size() == 0) return Tensor<T>(n.value.shape());
    return n.grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() {
    nodes_.clear();
    backward_done_ = false;
  }

  /// Same-padded, stride-1 2-D convolution of x {Cin, H, W} with
  /// w {Cout, Cin, k, k} and bias b {Cout}. k must be odd.
  Var conv2d(Var x, Var w, Var b, int dilation = 1) {
    const auto& xv = value(x);
    const auto& wv = value(w);
    const auto& bv = value(b);
    if (xv.rank() != 3 || wv.rank() != 4 || bv.rank() != 1) throw ValidationError("conv2d: bad ranks");
    const int cin = xv.dim(0), rows = xv.dim(1), cols = xv.dim(2);
    const int cout = wv.dim(0), k = wv.dim(2);
    if (wv.dim(1) != cin) {
      throw ValidationError("conv2d: kernel expects " + std::to_string(wv.dim(1)) +
                            " input channels, got " + std::to_string(cin));
    }
    if (wv.dim(3) != k || k % 2 == 0) throw ValidationError("conv2d: kernel must be square and odd");
    if (bv.dim(0) != cout) throw ValidationError("conv2d: bias size mismatch");
    if (dilation < 1) throw ValidationError("conv2d: dilation must be >= 1");

    const int patch = cin * k * k;
    const int pixels = rows * cols;
    // k == 1 uses the input directly as the column matrix.
    auto cols_buf = std::make_shared<std::vector<T>>();
    if (k != 1) {
      cols_buf->resize(static_cast<std::size_t>(patch) * pixels);
      im2col(xv.data(), cin, rows, cols, k, dilation, cols_buf->data());
    }
    const T* col_ptr = k == 1 ? xv.data() : cols_buf->data();

    Tensor<T> out({cout, rows, cols});
    MatMap o(out.data(), cout, pixels);
    o.noalias() = ConstMatMap(wv.data(), cout, patch) * ConstMatMap(col_ptr, patch, pixels);
    o.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bv.data(), cout);

    const Var y = push(std::move(out), needs_grad(x) || needs_grad(w) || needs_grad(b));
    node(y).backward = [this, x, w, b, y, cin, rows, cols, cout, k, dilation, patch, pixels,
                        cols_buf]() {
      const auto& gy = node(y).grad;
      ConstMatMap g(gy.data(), cout, pixels);
      const T* col_ptr = k == 1 ? node(x).value.data() : cols_buf->data();
      if (needs_grad(w)) {
        MatMap gw(grad_buffer(w).data(), cout, patch);
        gw.noalias() += g * ConstMatMap(col_ptr, patch, pixels).transpose();
      }
      if (needs_grad(b)) {
        auto& gb = grad_buffer(b);
        for (int c = 0; c < cout; ++c) {
          T acc{0};
          for (int p = 0; p < pixels; ++p) acc += gy[static_cast<std::size_t>(c) * pixels + p];
          gb[c] += acc;
        }
      }
      if (needs_grad(x)) {
        ConstMatMap wm(node(w).value.data(), cout, patch);
        if (k == 1) {
          MatMap gx(grad_buffer(x).data(), cin, pixels);
          gx.noalias() += wm.transpose() * g;
        } else {
          std::vector<T> gcol(static_cast<std::size_t>(patch) * pixels);
          MatMap(gcol.data(), patch, pixels).noalias() = wm.transpose() * g;
          col2im(gcol.data(), cin, rows, cols, k, dilation, grad_buffer(x).data());
        }
      }
    };
    return y;
  }

  Var relu(Var x) {
    const auto& xv = value(x);
    Tensor<T> out(xv.shape());
    for (std::size_t k = 0; k < xv.size(); ++k) out[k] = xv[k] > T{0} ? xv[k] : T{0};
    const Var y = push(std::move(out), needs_grad(x));
    node(y).backward = [this, x, y]() {
      if (!needs_grad(x)) return;
      const auto& xv = node(x).value;
      const auto& gy = node(y).grad;
      auto& gx = grad_buffer(x);
      for (std::size_t k = 0; k < xv.size(); ++k) {
        if (xv[k] > T{0}) gx[k] += gy[k];
      }
    };
    return y;
  }

  Var add(Var a, Var b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (!av.same_shape(bv)) {
      throw ValidationError("add: shapes " + shape_string(av.shape()) + " and " +
                            shape_string(bv.shape()) + " differ");
    }
    Tensor<T> out(av.shape());
    for (std::size_t k = 0; k < av.size(); ++k) out[k] = av[k] + bv[k];
    const Var y = push(std::move(out), needs_grad(a) || needs_grad(b));
    node(y).backward = [this, a, b, y]() {
      const auto& gy = node(y).grad;
      for (Var in : {a, b}) {
        if (!needs_grad(in)) continue;
        auto& g = grad_buffer(in);
        for (std::size_t k = 0; k < gy.size(); ++k) g[k] += gy[k];
      }
    };
    return y;
  }

  /// Scalar masked softmax cross-entropy over the channel axis of logits
  /// {C, H, W}. `target` holds one class index per pixel; an empty mask
  /// selects every pixel.
  Var softmax_cross_entropy(Var logits, std::vector<int> target, std::vector<std::uint8_t> mask = {}) {
    const auto& lv = value(logits);
    if (lv.rank() != 3) throw ValidationError("softmax_cross_entropy: logits must be {C,H,W}");
    auto grad = std::make_shared<Tensor<T>>(lv.shape());
    const double loss = dwd::softmax_cross_entropy<T>(lv.span(), lv.dim(0), target, mask,
                                                       needs_grad(logits) ? grad->span() : std::span<T>{});
    const Var y = push(Tensor<T>::scalar(static_cast<T>(loss)), needs_grad(logits));
    node(y).backward = [this, logits, y, grad]() { accumulate_scaled(logits, *grad, node(y).grad[0]); };
    return y;
  }

  /// Scalar masked mean squared error against a constant target.
  Var masked_mse(Var pred, const Tensor<T>& target, std::vector<std::uint8_t> mask = {}) {
    const auto& pv = value(pred);
    if (!pv.same_shape(target) || pv.rank() != 3) {
      throw ValidationError("masked_mse: prediction " + shape_string(pv.shape()) +
                            " vs target " + shape_string(target.shape()));
    }
    auto grad = std::make_shared<Tensor<T>>(pv.shape());
    const double loss = dwd::masked_mse<T>(pv.span(), target.span(), pv.dim(0), mask,
                                           needs_grad(pred) ? grad->span() : std::span<T>{});
    const Var y = push(Tensor<T>::scalar(static_cast<T>(loss)), needs_grad(pred));
    node(y).backward = [this, pred, y, grad]() { accumulate_scaled(pred, *grad, node(y).grad[0]); };
    return y;
  }

  /// sum_k weights[k] * terms[k] over scalar nodes.
  Var weighted_sum(std::vector<Var> terms, std::vector<T> weights) {
    if (terms.size() != weights.size() || terms.empty()) {
      throw ValidationError("weighted_sum: terms and weights must be nonempty and aligned");
    }
    T total{0};
    bool any = false;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (value(terms[k]).size() != 1) throw ValidationError("weighted_sum: terms must be scalars");
      total += weights[k] * value(terms[k])[0];
      any = any || needs_grad(terms[k]);
    }
    const Var y = push(Tensor<T>::scalar(total), any);
    node(y).backward = [this, terms, weights, y]() {
      const T gy = node(y).grad[0];
      for (std::size_t k = 0; k < terms.size(); ++k) {
        if (needs_grad(terms[k])) grad_buffer(terms[k])[0] += weights[k] * gy;
      }
    };
    return y;
  }

  /// Propagates d(loss)/d(node) to every node recorded before `loss`.
  void backward(Var loss) {
    if (nodes_.empty()) throw UsageError("backward called on an empty tape (no forward pass)");
    if (!loss.valid() || loss.index >= nodes_.size()) throw UsageError("backward: unknown variable");
    if (node(loss).value.size() != 1) throw UsageError("backward: loss must be a scalar");
    for (auto& n : nodes_) n.grad = Tensor<T>();
    grad_buffer(loss)[0] = T{1};
    for (std::size_t k = loss.index + 1; k-- > 0;) {
      auto& n = nodes_[k];
      if (n.requires_grad && n.backward && n.grad.size() != 0) n.backward();
    }
    backward_done_ = true;
  }

  bool backward_done() const noexcept { return backward_done_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var push(Tensor<T> value, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad, {}});
    return Var{nodes_.size() - 1};
  }

  Node& node(Var v) {
    if (!v.valid() || v.index >= nodes_.size()) throw UsageError("unknown tape variable");
    return nodes_[v.index];
  }
  const Node& node(Var v) const {
    if (!v.valid() || v.index >= nodes_.size()) throw UsageError("unknown tape variable");
    return nodes_[v.index];
  }

  bool needs_grad(Var v) const { return node(v).requires_grad; }

  Tensor<T>& grad_buffer(Var v) {
    auto& n = node(v);
    if (n.grad.size() == 0) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  void accumulate_scaled(Var v, const Tensor<T>& g, T scale) {
    if (!needs_grad(v)) return;
    auto& dst = grad_buffer(v);
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += scale * g[k];
  }

  // Column matrix {cin*k*k, rows*cols}; out-of-image taps are zero.
  static void im2col(const T* x, int cin, int rows, int cols, int k, int dilation, T* out) {
    const int half = k / 2;
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    for (int c = 0; c < cin; ++c) {
      for (int ki = 0; ki < k; ++ki) {
        for (int kj = 0; kj < k; ++kj) {
          T* row = out + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * pixels;
          const int di = (ki - half) * dilation;
          const int dj = (kj - half) * dilation;
          const int j0 = std::max(0, -dj), j1 = std::min(cols, cols - dj);
          for (int i = 0; i < rows; ++i) {
            T* dst = row + static_cast<std::size_t>(i) * cols;
            const int si = i + di;
            if (si < 0 || si >= rows || j0 >= j1) {
              std::fill(dst, dst + cols, T{0});
              continue;
            }
            const T* src = x + (static_cast<std::size_t>(c) * rows + si) * cols;
            std::fill(dst, dst + j0, T{0});
            std::copy(src + j0 + dj, src + j1 + dj, dst + j0);
            std::fill(dst + j1, dst + cols, T{0});
          }
        }
      }
    }
  }

  // Adjoint of im2col: scatter-adds columns back into the image.
  static void col2im(const T* col, int cin, int rows, int cols, int k, int dilation, T* gx) {
    const int half = k / 2;
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    for (int c = 0; c < cin; ++c) {
      for (int ki = 0; ki < k; ++ki) {
        for (int kj = 0; kj < k; ++kj) {
          const T* row = col + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * pixels;
          const int di = (ki - half) * dilation;
          const int dj = (kj - half) * dilation;
          const int j0 = std::max(0, -dj), j1 = std::min(cols, cols - dj);
          for (int i = 0; i < rows; ++i) {
            const int si = i + di;
            if (si < 0 || si >= rows || j0 >= j1) continue;
            const T* src = row + static_cast<std::size_t>(i) * cols;
            T* dst = gx + (static_cast<std::size_t>(c) * rows + si) * cols;
            for (int j = j0; j < j1; ++j) dst[j + dj] += src[j];
          }
        }
      }
    }
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace dwd
