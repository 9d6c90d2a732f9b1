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

// Ground-truth target synthesis: conical energy peaks at object centers,
// nearest-center class labels and box dimensions on the cone support.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/types.hpp"

namespace dwd {

namespace detail {

inline void check_annotations(std::span<const Annotation> annotations, int rows, int cols) {
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    validate_annotation(annotations[a], rows, cols);
    for (std::size_t b = 0; b < a; ++b) {
      if (annotations[a].center_i == annotations[b].center_i &&
          annotations[a].center_j == annotations[b].center_j) {
        throw ValidationError("annotations " + std::to_string(b) + " and " + std::to_string(a) +
                              " share the same center; such objects cannot be separated");
      }
    }
  }
}

// Calls visit(i, j, squared_distance) for every lattice point of the
// (2r+1)-wide square around the center that lies inside the grid.
template <typename Visit>
void for_each_in_window(const Annotation& a, int radius, int rows, int cols, Visit&& visit) {
  const int i0 = std::max(0, static_cast<int>(std::floor(a.center_i - radius)));
  const int i1 = std::min(rows - 1, static_cast<int>(std::ceil(a.center_i + radius)));
  const int j0 = std::max(0, static_cast<int>(std::floor(a.center_j - radius)));
  const int j1 = std::min(cols - 1, static_cast<int>(std::ceil(a.center_j + radius)));
  for (int i = i0; i <= i1; ++i) {
    const double di = i - a.center_i;
    for (int j = j0; j <= j1; ++j) {
      const double dj = j - a.center_j;
      visit(i, j, di * di + dj * dj);
    }
  }
}

// Index of the nearest center for every pixel that lies in some center's
// window, -1 elsewhere. Ties go to the lowest annotation index.
inline Raster<int> nearest_center_index(std::span<const Annotation> annotations, int radius,
                                        int rows, int cols) {
  Raster<int> nearest(rows, cols, 1, -1);
  Raster<double> best(rows, cols, 1, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    for_each_in_window(annotations[a], radius, rows, cols, [&](int i, int j, double d2) {
      if (d2 < best(i, j)) {
        best(i, j) = d2;
        nearest(i, j) = static_cast<int>(a);
      }
    });
  }
  return nearest;
}

}  // namespace detail

/// Energy surface: E_max * (1 - d / r) at distance d from the nearest cone
/// apex, maximised over centers and floored at zero.
inline EnergyMap synthesize_energy(std::span<const Annotation> annotations, int rows, int cols,
                                   const DwdConfig& cfg) {
  if (cfg.radius < 1) throw ValidationError("radius must be >= 1");
  detail::check_annotations(annotations, rows, cols);
  EnergyMap energy(rows, cols);
  const double e_max = cfg.e_max;
  const double r = cfg.radius;
  for (const auto& a : annotations) {
    detail::for_each_in_window(a, cfg.radius, rows, cols, [&](int i, int j, double d2) {
      const double v = e_max * (1.0 - std::sqrt(d2) / r);
      if (v > energy(i, j)) energy(i, j) = v;
    });
  }
  return energy;
}

/// Level of an energy value: round half up, clipped to [0, e_max].
inline int energy_level(double value, int e_max) {
  const int level = static_cast<int>(std::floor(value + 0.5));
  return std::clamp(level, 0, e_max);
}

inline QuantizedEnergyMap quantize_energy(const EnergyMap& energy, const DwdConfig& cfg) {
  QuantizedEnergyMap q(energy.rows(), energy.cols(), cfg.energy_bins());
  for (int i = 0; i < energy.rows(); ++i) {
    for (int j = 0; j < energy.cols(); ++j) q(i, j, energy_level(energy(i, j), cfg.e_max)) = 1;
  }
  return q;
}

/// Class of the nearest center wherever the energy is positive, 0 elsewhere.
inline ClassMap synthesize_class_map(std::span<const Annotation> annotations,
                                     const EnergyMap& energy, const DwdConfig& cfg) {
  const auto nearest =
      detail::nearest_center_index(annotations, cfg.radius, energy.rows(), energy.cols());
  ClassMap classes(energy.rows(), energy.cols());
  for (int i = 0; i < energy.rows(); ++i) {
    for (int j = 0; j < energy.cols(); ++j) {
      if (energy(i, j) > 0 && nearest(i, j) >= 0) {
        classes(i, j) = annotations[nearest(i, j)].class_id;
      }
    }
  }
  return classes;
}

/// (width, height) of the nearest center's box wherever the energy is positive.
inline BBoxMap synthesize_bbox_map(std::span<const Annotation> annotations, const EnergyMap& energy,
                                   const DwdConfig& cfg) {
  const auto nearest =
      detail::nearest_center_index(annotations, cfg.radius, energy.rows(), energy.cols());
  BBoxMap boxes(energy.rows(), energy.cols());
  for (int i = 0; i < energy.rows(); ++i) {
    for (int j = 0; j < energy.cols(); ++j) {
      if (energy(i, j) > 0 && nearest(i, j) >= 0) {
        const auto& a = annotations[nearest(i, j)];
        boxes(i, j, 0) = a.width;
        boxes(i, j, 1) = a.height;
      }
    }
  }
  return boxes;
}

/// All four targets for one page.
struct TargetMaps {
  EnergyMap energy;
  QuantizedEnergyMap quantized;
  ClassMap classes;
  BBoxMap boxes;
};

inline TargetMaps encode_targets(std::span<const Annotation> annotations, int rows, int cols,
                                 const DwdConfig& cfg) {
  TargetMaps t;
  t.energy = synthesize_energy(annotations, rows, cols, cfg);
  t.quantized = quantize_energy(t.energy, cfg);
  t.classes = synthesize_class_map(annotations, t.energy, cfg);
  t.boxes = synthesize_bbox_map(annotations, t.energy, cfg);
  return t;
}

}  // namespace dwd
