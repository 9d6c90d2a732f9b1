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


// Shared helpers for the test suites: seeded generators, a flood-fill
// labeling oracle, finite-difference gradient checks and scratch dirs.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "dwd/dwd.hpp"

namespace dwd::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline BinaryMask random_mask(Rng& rng, int rows, int cols, double density) {
  BinaryMask m(rows, cols);
  std::bernoulli_distribution on(density);
  for (auto& v : m.storage()) v = on(rng) ? 1 : 0;
  return m;
}

// Iterative 4-connected flood fill; labels in raster order of the seed pixel.
inline Raster<std::int32_t> flood_fill_labels(const BinaryMask& mask, int& count) {
  Raster<std::int32_t> labels(mask.rows(), mask.cols(), 1, 0);
  count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int i = 0; i < mask.rows(); ++i) {
    for (int j = 0; j < mask.cols(); ++j) {
      if (!mask(i, j) || labels(i, j)) continue;
      ++count;
      stack.push_back({i, j});
      labels(i, j) = count;
      while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        const int di[] = {-1, 1, 0, 0}, dj[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int y = a + di[k], x = b + dj[k];
          if (mask.contains(y, x) && mask(y, x) && !labels(y, x)) {
            labels(y, x) = count;
            stack.push_back({y, x});
          }
        }
      }
    }
  }
  return labels;
}

// True when the two labelings induce the same partition of the pixels.
inline bool same_partition(const Raster<std::int32_t>& a, const Raster<std::int32_t>& b) {
  if (!a.same_grid(b)) return false;
  std::vector<std::int64_t> ab, ba;
  auto link = [](std::vector<std::int64_t>& map, int from, int to) {
    if (from >= static_cast<int>(map.size())) map.resize(from + 1, -1);
    if (map[from] == -1) map[from] = to;
    return map[from] == to;
  };
  for (std::size_t k = 0; k < a.size(); ++k) {
    const int x = a.data()[k], y = b.data()[k];
    if ((x == 0) != (y == 0)) return false;
    if (x == 0) continue;
    if (!link(ab, x, y) || !link(ba, y, x)) return false;
  }
  return true;
}

// Random well-separated lattice annotations inside a rows x cols page.
inline std::vector<Annotation> random_annotations(Rng& rng, int rows, int cols, int count, double min_sep,
                                                  int num_classes = 5, int margin = 0) {
  std::vector<Annotation> out;
  for (int attempt = 0; attempt < 1000 && static_cast<int>(out.size()) < count; ++attempt) {
    Annotation a;
    a.class_id = uniform_int(rng, 1, num_classes);
    a.center_i = uniform_int(rng, margin, rows - 1 - margin);
    a.center_j = uniform_int(rng, margin, cols - 1 - margin);
    a.width = uniform_int(rng, 1, 15);
    a.height = uniform_int(rng, 1, 15);
    bool ok = true;
    for (const auto& b : out) {
      ok = ok && std::hypot(a.center_i - b.center_i, a.center_j - b.center_j) >= min_sep;
    }
    if (ok) out.push_back(a);
  }
  return out;
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.storage()) v = static_cast<T>(uniform(rng, lo, hi));
  return t;
}

// A scalar graph over leaf tensors, rebuilt from scratch on every call.
using GraphFn = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

// Largest relative error ||analytic - numeric|| / max(||analytic||, ||numeric||)
// over the leaves, with central differences of step h.
inline double gradient_check(const GraphFn& graph, std::vector<Tensor<double>> leaves, double h = 1e-6) {
  auto eval = [&](std::vector<Var>* vars_out, Tape<double>& tape) {
    std::vector<Var> vars;
    for (const auto& t : leaves) vars.push_back(tape.parameter(t));
    const Var out = graph(tape, vars);
    if (vars_out) *vars_out = vars;
    return out;
  };
  Tape<double> tape;
  std::vector<Var> vars;
  const Var loss = eval(&vars, tape);
  tape.backward(loss);

  double worst = 0.0;
  for (std::size_t n = 0; n < leaves.size(); ++n) {
    const auto analytic = tape.grad(vars[n]);
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < leaves[n].size(); ++k) {
      const double keep = leaves[n][k];
      leaves[n][k] = keep + h;
      Tape<double> tp;
      const double up = tp.value(eval(nullptr, tp))[0];
      leaves[n][k] = keep - h;
      Tape<double> tm;
      const double down = tm.value(eval(nullptr, tm))[0];
      leaves[n][k] = keep;
      const double numeric = (up - down) / (2 * h);
      diff2 += (analytic[k] - numeric) * (analytic[k] - numeric);
      a2 += analytic[k] * analytic[k];
      n2 += numeric * numeric;
    }
    const double scale = std::sqrt(std::max(a2, n2));
    if (scale > 0) worst = std::max(worst, std::sqrt(diff2) / scale);
  }
  return worst;
}

// Keeps values away from the relu kink so central differences stay smooth.
inline void push_off_zero(Tensor<double>& t, double gap = 1e-3) {
  for (auto& v : t.storage()) {
    if (std::abs(v) < gap) v = v < 0 ? -gap : gap;
  }
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "dwd-test-XXXXXX").string();
    path_ = ::mkdtemp(pattern.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace dwd::test
