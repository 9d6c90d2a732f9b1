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

// Watershed-style decoding of dense predictions: a fixed-level cut of the
// energy surface, two-pass connected-component labeling, and per-component
// center, class and box estimates.

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/log.hpp"
#include "dwd/types.hpp"
#include "dwd/union_find.hpp"

namespace dwd {

/// Label raster, 0 = background, components numbered 1..component_count.
struct ComponentLabeling {
  Raster<std::int32_t> labels;
  int component_count = 0;
};

struct Point {
  double i = 0.0;
  double j = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct BoxSize {
  double width = 0.0;
  double height = 0.0;
  friend bool operator==(const BoxSize&, const BoxSize&) = default;
};

inline BinaryMask cut_and_binarize(const EnergyMap& energy, int cut_level, int e_max) {
  if (cut_level < 1 || cut_level > e_max) {
    throw ValidationError("cut_level " + std::to_string(cut_level) + " outside [1, " +
                          std::to_string(e_max) + "]");
  }
  BinaryMask mask(energy.rows(), energy.cols());
  auto src = energy.data();
  auto dst = mask.data();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] >= cut_level ? 1 : 0;
  return mask;
}

/// Classical two-pass labeling, 4-connectivity. The first pass hands out
/// provisional labels and records equivalences in a union-find; the second
/// resolves each pixel to its root and renumbers roots 1..n in the order
/// they are first met in raster order.
inline ComponentLabeling label_components(const BinaryMask& mask) {
  const int rows = mask.rows();
  const int cols = mask.cols();
  ComponentLabeling out{Raster<std::int32_t>(rows, cols), 0};
  auto& labels = out.labels;

  UnionFind sets;
  sets.make_set();  // provisional label 0 stays background
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (!mask(i, j)) continue;
      const std::int32_t up = i > 0 ? labels(i - 1, j) : 0;
      const std::int32_t left = j > 0 ? labels(i, j - 1) : 0;
      if (up == 0 && left == 0) {
        labels(i, j) = static_cast<std::int32_t>(sets.make_set());
      } else if (up != 0 && left != 0) {
        labels(i, j) = std::min(up, left);
        if (up != left) sets.unite(static_cast<std::uint32_t>(up), static_cast<std::uint32_t>(left));
      } else {
        labels(i, j) = up != 0 ? up : left;
      }
    }
  }

  std::vector<std::int32_t> final_label(sets.size(), 0);
  for (auto& v : labels.data()) {
    if (v == 0) continue;
    const auto root = sets.find(static_cast<std::uint32_t>(v));
    if (final_label[root] == 0) final_label[root] = ++out.component_count;
    v = final_label[root];
  }
  return out;
}

/// Center of gravity of every component, index l-1 for label l.
inline std::vector<Point> component_centers(const ComponentLabeling& lab) {
  std::vector<double> sum_i(lab.component_count, 0.0), sum_j(lab.component_count, 0.0);
  std::vector<std::size_t> count(lab.component_count, 0);
  for (int i = 0; i < lab.labels.rows(); ++i) {
    for (int j = 0; j < lab.labels.cols(); ++j) {
      const int l = lab.labels(i, j);
      if (l == 0) continue;
      sum_i[l - 1] += i;
      sum_j[l - 1] += j;
      ++count[l - 1];
    }
  }
  std::vector<Point> centers(lab.component_count);
  for (int l = 0; l < lab.component_count; ++l) {
    if (count[l] == 0) continue;
    centers[l] = {sum_i[l] / static_cast<double>(count[l]), sum_j[l] / static_cast<double>(count[l])};
  }
  return centers;
}

/// Modal nonzero class per component; ties go to the smaller id, and a
/// component whose pixels are all background gets class 0.
inline std::vector<int> vote_classes(const ComponentLabeling& lab, const ClassMap& classes) {
  if (!lab.labels.same_grid(classes)) throw ValidationError("class map size differs from labeling");
  std::vector<std::map<int, std::size_t>> votes(lab.component_count);
  auto l_data = lab.labels.data();
  auto c_data = classes.data();
  for (std::size_t k = 0; k < l_data.size(); ++k) {
    if (l_data[k] != 0 && c_data[k] != 0) ++votes[l_data[k] - 1][c_data[k]];
  }
  std::vector<int> out(lab.component_count, 0);
  for (int l = 0; l < lab.component_count; ++l) {
    std::size_t best = 0;
    for (const auto& [cls, n] : votes[l]) {  // ascending class id
      if (n > best) {
        best = n;
        out[l] = cls;
      }
    }
  }
  return out;
}

/// Mean (width, height) over each component's pixels.
inline std::vector<BoxSize> average_bboxes(const ComponentLabeling& lab, const BBoxMap& boxes) {
  if (!lab.labels.same_grid(boxes)) throw ValidationError("bbox map size differs from labeling");
  std::vector<double> sum_w(lab.component_count, 0.0), sum_h(lab.component_count, 0.0);
  std::vector<std::size_t> count(lab.component_count, 0);
  for (int i = 0; i < lab.labels.rows(); ++i) {
    for (int j = 0; j < lab.labels.cols(); ++j) {
      const int l = lab.labels(i, j);
      if (l == 0) continue;
      sum_w[l - 1] += boxes(i, j, 0);
      sum_h[l - 1] += boxes(i, j, 1);
      ++count[l - 1];
    }
  }
  std::vector<BoxSize> out(lab.component_count);
  for (int l = 0; l < lab.component_count; ++l) {
    if (count[l] == 0) continue;
    const auto n = static_cast<double>(count[l]);
    out[l] = {sum_w[l] / n, sum_h[l] / n};
  }
  return out;
}

/// Largest energy inside each component.
inline std::vector<double> component_peaks(const ComponentLabeling& lab, const EnergyMap& energy) {
  std::vector<double> peak(lab.component_count, 0.0);
  auto l_data = lab.labels.data();
  auto e_data = energy.data();
  for (std::size_t k = 0; k < l_data.size(); ++k) {
    if (l_data[k] != 0) peak[l_data[k] - 1] = std::max(peak[l_data[k] - 1], e_data[k]);
  }
  return peak;
}

/// Full decoding: cut, label, centers, class vote, box average. Confidence
/// is the component's peak energy over E_max. Output sorted by confidence,
/// descending; equal confidences keep raster order of the components.
inline std::vector<Detection> decode(const EnergyMap& energy, const ClassMap& classes,
                                     const BBoxMap& boxes, const DwdConfig& cfg) {
  if (!energy.same_grid(classes) || !energy.same_grid(boxes)) {
    throw ValidationError("energy, class and bbox maps must share dimensions");
  }
  const auto lab = label_components(cut_and_binarize(energy, cfg.cut_level, cfg.e_max));
  const auto centers = component_centers(lab);
  const auto votes = vote_classes(lab, classes);
  const auto dims = average_bboxes(lab, boxes);
  const auto peaks = component_peaks(lab, energy);

  std::vector<Detection> out;
  int dropped = 0;
  for (int l = 0; l < lab.component_count; ++l) {
    if (votes[l] == 0 || !(dims[l].width > 0) || !(dims[l].height > 0)) {
      ++dropped;
      continue;
    }
    const double confidence = std::clamp(peaks[l] / cfg.e_max, 0.0, 1.0);
    out.push_back({votes[l], centers[l].i, centers[l].j, dims[l].width, dims[l].height, confidence});
  }
  if (dropped > 0) {
    log::debug("decode: dropped " + std::to_string(dropped) +
               " component(s) with background class or empty box");
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  return out;
}

}  // namespace dwd
