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

// 8-bit PNG read/write through libpng.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/types.hpp"

namespace dwd {

/// Interleaved 8-bit RGB image.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;  // rows * cols * 3

  RgbImage() = default;
  RgbImage(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c * 3, 0) {}
  std::uint8_t* at(int i, int j) { return data.data() + (static_cast<std::size_t>(i) * cols + j) * 3; }
  const std::uint8_t* at(int i, int j) const {
    return data.data() + (static_cast<std::size_t>(i) * cols + j) * 3;
  }
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void write_png_rows(const std::filesystem::path& path, int rows, int cols, int color_type,
                           int channels, const std::uint8_t* pixels) {
  auto tmp = path;
  tmp += ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw IoError(path.string(), "cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw IoError(path.string(), "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IoError(path.string(), "libpng write failed");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int i = 0; i < rows; ++i) {
      png_write_row(png, const_cast<png_bytep>(pixels + static_cast<std::size_t>(i) * cols * channels));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), "rename failed: " + ec.message());
}

}  // namespace detail

/// Reads any PNG and converts it to 8-bit grayscale.
inline Raster<std::uint8_t> read_png_gray(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError(path.string(), "cannot open for reading");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string(), "libpng init failed");
  }
  Raster<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": corrupt PNG");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto bits = png_get_bit_depth(png, info);
  if (bits == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bits < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  const int rows = static_cast<int>(png_get_image_height(png, info));
  const int cols = static_cast<int>(png_get_image_width(png, info));
  out = Raster<std::uint8_t>(rows, cols);
  std::vector<png_bytep> row_ptrs(rows);
  for (int i = 0; i < rows; ++i) row_ptrs[i] = out.data().data() + static_cast<std::size_t>(i) * cols;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

inline void write_png_gray(const std::filesystem::path& path, const Raster<std::uint8_t>& img) {
  detail::write_png_rows(path, img.rows(), img.cols(), PNG_COLOR_TYPE_GRAY, 1, img.data().data());
}

inline void write_png_rgb(const std::filesystem::path& path, const RgbImage& img) {
  detail::write_png_rows(path, img.rows, img.cols, PNG_COLOR_TYPE_RGB, 3, img.data.data());
}

inline Raster<std::uint8_t> to_gray8(const PageImage& page) {
  Raster<std::uint8_t> out(page.rows(), page.cols());
  auto src = page.pixels.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < src.size(); ++k) {
    double v = std::clamp(src[k], 0.0, 1.0);
    dst[k] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

inline PageImage from_gray8(const Raster<std::uint8_t>& img, double interline) {
  PageImage page(img.rows(), img.cols(), interline);
  auto src = img.data();
  auto dst = page.pixels.data();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] / 255.0;
  return page;
}

inline PageImage load_page_png(const std::filesystem::path& path, double interline) {
  return from_gray8(read_png_gray(path), interline);
}

inline void save_page_png(const std::filesystem::path& path, const PageImage& page) {
  write_png_gray(path, to_gray8(page));
}

}  // namespace dwd
