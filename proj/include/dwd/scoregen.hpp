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

// Synthetic score pages: five-line staves plus procedurally drawn symbol
// glyphs with exact bounding-box ground truth, and interline rescaling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/log.hpp"
#include "dwd/types.hpp"

namespace dwd {

/// Glyph-shape families the default alphabet draws from.
enum class GlyphShape { kFilledEllipse, kHollowEllipse, kBar, kSharp, kFlat };

struct SymbolDef {
  int class_id = 1;
  std::string name;
  GlyphShape shape = GlyphShape::kFilledEllipse;
  double width_units = 1.0;   // in interlines
  double height_units = 1.0;  // in interlines
  double weight = 1.0;        // relative frequency
};

struct SymbolAlphabet {
  std::vector<SymbolDef> symbols;

  void validate() const {
    if (symbols.empty()) throw ValidationError("alphabet is empty");
    for (std::size_t a = 0; a < symbols.size(); ++a) {
      if (symbols[a].class_id < 1) throw ValidationError("alphabet class ids must be >= 1");
      if (!(symbols[a].weight >= 0)) throw ValidationError("alphabet weights must be >= 0");
      for (std::size_t b = 0; b < a; ++b) {
        if (symbols[a].class_id == symbols[b].class_id) throw ValidationError("duplicate class id");
      }
    }
  }

  std::string name_of(int class_id) const {
    for (const auto& s : symbols) {
      if (s.class_id == class_id) return s.name;
    }
    return "class" + std::to_string(class_id);
  }
};

/// Five classes loosely modeled on common notation symbols.
inline SymbolAlphabet default_alphabet() {
  return {{
      {1, "noteheadBlack", GlyphShape::kFilledEllipse, 1.2, 1.0, 1.0},
      {2, "noteheadHalf", GlyphShape::kHollowEllipse, 1.2, 1.0, 1.0},
      {3, "restBar", GlyphShape::kBar, 0.4, 1.6, 1.0},
      {4, "accidentalSharp", GlyphShape::kSharp, 0.8, 1.8, 1.0},
      {5, "accidentalFlat", GlyphShape::kFlat, 0.7, 1.6, 1.0},
  }};
}

struct GenConfig {
  int rows = 128;
  int cols = 128;
  double interline = 10.0;
  int symbols_min = 10;
  int symbols_max = 18;
  double skew = 0.0;           // class frequency ~ rank^-skew
  double min_separation = 7.0; // pixels between centers
  bool collision_free = true;  // also keep boxes 1 px apart
  double noise = 0.0;          // salt-and-pepper probability
  std::uint64_t seed = 1;

  void validate() const {
    if (rows < 1 || cols < 1) throw ValidationError("page dimensions must be positive");
    if (!(interline > 0)) throw ValidationError("interline must be > 0");
    if (symbols_min < 0 || symbols_max < symbols_min) throw ValidationError("bad symbol count range");
    if (!(noise >= 0 && noise <= 1)) throw ValidationError("noise must be in [0,1]");
    if (!(skew >= 0)) throw ValidationError("skew must be >= 0");
    if (!(min_separation >= 0)) throw ValidationError("min_separation must be >= 0");
  }
};

/// Rendered glyph: 1 = ink. Every border row and column carries ink, so the
/// raster extent is the tight bounding box.
using GlyphStamp = Raster<std::uint8_t>;

namespace detail {

inline int odd_pixels(double units, double interline) {
  const int n = static_cast<int>(std::lround(units * interline));
  return std::max(1, n % 2 == 0 ? n + 1 : n);
}

inline bool in_ellipse(double y, double x, double cy, double cx, double ry, double rx) {
  const double dy = (y - cy) / ry, dx = (x - cx) / rx;
  return dy * dy + dx * dx <= 1.0;
}

}  // namespace detail

inline GlyphStamp render_glyph(const SymbolDef& sym, double interline) {
  const int w = detail::odd_pixels(sym.width_units, interline);
  const int h = detail::odd_pixels(sym.height_units, interline);
  GlyphStamp g(h, w);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  const int stroke = std::max(1, static_cast<int>(std::lround(interline * 0.15)));
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      bool ink = false;
      switch (sym.shape) {
        case GlyphShape::kFilledEllipse:
          ink = detail::in_ellipse(i, j, cy, cx, h / 2.0, w / 2.0);
          break;
        case GlyphShape::kHollowEllipse:
          ink = detail::in_ellipse(i, j, cy, cx, h / 2.0, w / 2.0) &&
                !detail::in_ellipse(i, j, cy, cx, h / 2.0 - stroke, w / 2.0 - stroke);
          break;
        case GlyphShape::kBar:
          ink = true;
          break;
        case GlyphShape::kSharp: {
          const int v0 = w / 4, v1 = w - 1 - w / 4;
          const int h0 = h / 3, h1 = h - 1 - h / 3;
          ink = (i >= 1 && i < h && (j == v0 || j == v0 + 1)) ||
                (i >= 0 && i < h - 1 && (j == v1 || j == v1 - 1)) ||
                (i >= h0 && i < h0 + stroke) || (i <= h1 && i > h1 - stroke);
          break;
        }
        case GlyphShape::kFlat: {
          // Stem on the left, belly over the lower half.
          const double by = std::round(h * 0.72), bry = h * 0.28, brx = static_cast<double>(w - 1);
          const bool outer = detail::in_ellipse(i, j, by, 0.0, bry, brx);
          const bool inner = detail::in_ellipse(i, j, by, 0.0, bry - stroke, brx - stroke - 1);
          ink = j < stroke || (i >= h / 2 && outer && !inner);
          break;
        }
      }
      g(i, j) = ink ? 1 : 0;
    }
  }
  return g;
}

struct GeneratedPage {
  PageImage image;
  std::vector<Annotation> annotations;
};

/// Deterministic per-page seed from a base seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Class sampling weights: weight_k * rank_k^-skew with 1-based ranks.
inline std::vector<double> class_weights(const SymbolAlphabet& alphabet, double skew) {
  std::vector<double> w;
  for (std::size_t k = 0; k < alphabet.symbols.size(); ++k) {
    w.push_back(alphabet.symbols[k].weight * std::pow(static_cast<double>(k + 1), -skew));
  }
  return w;
}

inline void draw_staves(PageImage& page) {
  const double il = page.interline;
  const int thickness = std::max(1, static_cast<int>(std::lround(il / 10.0)));
  const double staff_height = 4 * il;
  for (double top = 1.5 * il; top + staff_height < page.rows(); top += 7 * il) {
    for (int line = 0; line < 5; ++line) {
      const int row = static_cast<int>(std::lround(top + line * il));
      for (int t = 0; t < thickness && row + t < page.rows(); ++t) {
        for (int j = 0; j < page.cols(); ++j) page.pixels(row + t, j) = 0.0;
      }
    }
  }
}

/// Renders one page. Symbols that cannot be placed under the separation
/// constraints within a bounded number of attempts are skipped.
template <typename Rng>
GeneratedPage generate_page(const SymbolAlphabet& alphabet, const GenConfig& gen, Rng& rng) {
  alphabet.validate();
  gen.validate();
  GeneratedPage out{PageImage(gen.rows, gen.cols, gen.interline, 1.0), {}};
  draw_staves(out.image);

  std::vector<GlyphStamp> stamps;
  for (const auto& s : alphabet.symbols) stamps.push_back(render_glyph(s, gen.interline));
  const auto weights = class_weights(alphabet, gen.skew);
  std::discrete_distribution<int> pick_class(weights.begin(), weights.end());

  const int requested = std::uniform_int_distribution<int>(gen.symbols_min, gen.symbols_max)(rng);
  struct Box { int i0, j0, i1, j1; };
  std::vector<Box> boxes;
  constexpr int kMargin = 1;
  constexpr int kAttempts = 200;
  int skipped = 0;
  for (int n = 0; n < requested; ++n) {
    const int k = pick_class(rng);
    const auto& stamp = stamps[k];
    const int h = stamp.rows(), w = stamp.cols();
    if (h + 2 * kMargin > gen.rows || w + 2 * kMargin > gen.cols) {
      ++skipped;
      continue;
    }
    std::uniform_int_distribution<int> row_dist(kMargin, gen.rows - h - kMargin);
    std::uniform_int_distribution<int> col_dist(kMargin, gen.cols - w - kMargin);
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const int i0 = row_dist(rng), j0 = col_dist(rng);
      const double ci = i0 + (h - 1) / 2.0, cj = j0 + (w - 1) / 2.0;
      const Box box{i0, j0, i0 + h - 1, j0 + w - 1};
      bool ok = true;
      for (std::size_t b = 0; b < boxes.size() && ok; ++b) {
        const auto& a = out.annotations[b];
        const double d = std::hypot(a.center_i - ci, a.center_j - cj);
        if (d < gen.min_separation || d == 0.0) ok = false;
        if (gen.collision_free && box.i0 <= boxes[b].i1 + 1 && boxes[b].i0 <= box.i1 + 1 &&
            box.j0 <= boxes[b].j1 + 1 && boxes[b].j0 <= box.j1 + 1) {
          ok = false;
        }
      }
      if (!ok) continue;
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          if (stamp(i, j)) out.image.pixels(i0 + i, j0 + j) = 0.0;
        }
      }
      boxes.push_back(box);
      out.annotations.push_back({alphabet.symbols[k].class_id, ci, cj, static_cast<double>(w),
                                 static_cast<double>(h)});
      placed = true;
    }
    if (!placed) ++skipped;
  }
  if (skipped > 0) {
    log::info("generate_page: placed " + std::to_string(out.annotations.size()) + " of " +
              std::to_string(requested) + " symbols");
  }

  if (gen.noise > 0) {
    std::bernoulli_distribution flip(gen.noise), coin(0.5);
    for (auto& v : out.image.pixels.data()) {
      if (flip(rng)) v = coin(rng) ? 1.0 : 0.0;
    }
  }
  return out;
}

/// Bilinear rescale of the page by target / page.interline; annotation
/// centers and sizes scale by the same factor.
inline GeneratedPage interline_normalize(const PageImage& page, const std::vector<Annotation>& annotations,
                                         double target_interline) {
  if (!(page.interline > 0)) throw ValidationError("page interline must be > 0");
  if (!(target_interline > 0)) throw ValidationError("target interline must be > 0");
  if (page.interline == target_interline) return {page, annotations};

  const double s = target_interline / page.interline;
  const int rows = std::max(1, static_cast<int>(std::lround(page.rows() * s)));
  const int cols = std::max(1, static_cast<int>(std::lround(page.cols() * s)));
  GeneratedPage out{PageImage(rows, cols, target_interline), {}};
  const auto& src = page.pixels;
  for (int i = 0; i < rows; ++i) {
    const double y = std::clamp(i / s, 0.0, static_cast<double>(page.rows() - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, page.rows() - 1);
    const double fy = y - y0;
    for (int j = 0; j < cols; ++j) {
      const double x = std::clamp(j / s, 0.0, static_cast<double>(page.cols() - 1));
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, page.cols() - 1);
      const double fx = x - x0;
      const double top = src(y0, x0) * (1 - fx) + src(y0, x1) * fx;
      const double bottom = src(y1, x0) * (1 - fx) + src(y1, x1) * fx;
      out.image.pixels(i, j) = top * (1 - fy) + bottom * fy;
    }
  }
  for (auto a : annotations) {
    a.center_i *= s;
    a.center_j *= s;
    a.width *= s;
    a.height *= s;
    out.annotations.push_back(a);
  }
  return out;
}

}  // namespace dwd
