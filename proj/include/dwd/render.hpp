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

// Overlays: detection boxes with class-id labels, or a per-class tint of a
// class map, drawn over the grayscale page.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dwd/png_io.hpp"
#include "dwd/types.hpp"

namespace dwd {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed palette indexed by class id (class 0 unused).
inline Rgb class_color(int class_id) {
  static constexpr Rgb kPalette[] = {
      {230, 25, 75},  {60, 180, 75},  {0, 130, 200}, {245, 130, 48}, {145, 30, 180},
      {70, 200, 200}, {240, 50, 230}, {170, 110, 40}, {128, 0, 0},   {0, 0, 128},
  };
  constexpr int n = sizeof(kPalette) / sizeof(kPalette[0]);
  return kPalette[((class_id - 1) % n + n) % n];
}

inline RgbImage to_rgb(const PageImage& page) {
  const auto gray = to_gray8(page);
  RgbImage img(page.rows(), page.cols());
  for (int i = 0; i < img.rows; ++i) {
    for (int j = 0; j < img.cols; ++j) {
      auto* px = img.at(i, j);
      px[0] = px[1] = px[2] = gray(i, j);
    }
  }
  return img;
}

namespace detail {

// 3x5 digit glyphs, one row per nibble (bit 2 = left column).
inline constexpr std::uint8_t kDigits[10][5] = {
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
};

inline void put(RgbImage& img, int i, int j, const Rgb& c) {
  if (i < 0 || j < 0 || i >= img.rows || j >= img.cols) return;
  auto* px = img.at(i, j);
  px[0] = c[0];
  px[1] = c[1];
  px[2] = c[2];
}

}  // namespace detail

inline void draw_text(RgbImage& img, int top, int left, const std::string& digits, const Rgb& c) {
  int x = left;
  for (char ch : digits) {
    if (ch < '0' || ch > '9') continue;
    const auto& glyph = detail::kDigits[ch - '0'];
    for (int r = 0; r < 5; ++r) {
      for (int b = 0; b < 3; ++b) {
        if (glyph[r] & (4 >> b)) detail::put(img, top + r, x + b, c);
      }
    }
    x += 4;
  }
}

/// Pixel rectangle just outside the box's pixel extent.
struct PixelRect {
  int top, left, bottom, right;
};

inline PixelRect outline_rect(const Detection& d) {
  return {static_cast<int>(std::floor(d.center_i - d.height / 2)),
          static_cast<int>(std::floor(d.center_j - d.width / 2)),
          static_cast<int>(std::ceil(d.center_i + d.height / 2)),
          static_cast<int>(std::ceil(d.center_j + d.width / 2))};
}

inline void draw_detections(RgbImage& img, const std::vector<Detection>& dets) {
  for (const auto& d : dets) {
    const auto c = class_color(d.class_id);
    const auto r = outline_rect(d);
    for (int j = r.left; j <= r.right; ++j) {
      detail::put(img, r.top, j, c);
      detail::put(img, r.bottom, j, c);
    }
    for (int i = r.top; i <= r.bottom; ++i) {
      detail::put(img, i, r.left, c);
      detail::put(img, i, r.right, c);
    }
    const int label_top = r.top - 6 >= 0 ? r.top - 6 : r.bottom + 2;
    draw_text(img, label_top, r.left, std::to_string(d.class_id), c);
  }
}

/// Alpha-blends each nonzero class pixel toward its class color.
inline void tint_class_map(RgbImage& img, const ClassMap& classes, double alpha = 0.5) {
  for (int i = 0; i < std::min(img.rows, classes.rows()); ++i) {
    for (int j = 0; j < std::min(img.cols, classes.cols()); ++j) {
      const int cls = classes(i, j);
      if (cls == 0) continue;
      const auto c = class_color(cls);
      auto* px = img.at(i, j);
      for (int k = 0; k < 3; ++k) {
        px[k] = static_cast<std::uint8_t>(std::lround((1 - alpha) * px[k] + alpha * c[k]));
      }
    }
  }
}

}  // namespace dwd
