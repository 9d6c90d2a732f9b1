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

// Binary map files: "DWDM", u8 dtype, u8 rank, rank x u32 shape, then the
// row-major payload. Everything little-endian.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/types.hpp"

namespace dwd {

enum class DType : std::uint8_t { kU8 = 1, kI32 = 2, kF32 = 3, kF64 = 4 };

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, std::uint8_t>) return DType::kU8;
  else if constexpr (std::is_same_v<T, std::int32_t>) return DType::kI32;
  else if constexpr (std::is_same_v<T, float>) return DType::kF32;
  else if constexpr (std::is_same_v<T, double>) return DType::kF64;
  else static_assert(sizeof(T) == 0, "unsupported map element type");
}

template <typename Map>
struct MapTraits;
template <> struct MapTraits<EnergyMap> { using value = double; static constexpr int rank = 2; };
template <> struct MapTraits<ClassMap> { using value = std::int32_t; static constexpr int rank = 2; };
template <> struct MapTraits<BinaryMask> { using value = std::uint8_t; static constexpr int rank = 2; };
template <> struct MapTraits<BBoxMap> { using value = double; static constexpr int rank = 3; };
template <> struct MapTraits<QuantizedEnergyMap> { using value = std::uint8_t; static constexpr int rank = 3; };

namespace detail {

template <typename U>
void put_le(std::vector<char>& out, U v) {
  using Bits = std::conditional_t<sizeof(U) == 1, std::uint8_t,
               std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>>;
  Bits bits;
  std::memcpy(&bits, &v, sizeof(U));
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

template <typename U>
U get_le(const char* p) {
  using Bits = std::conditional_t<sizeof(U) == 1, std::uint8_t,
               std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>>;
  Bits bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    bits |= static_cast<Bits>(static_cast<std::uint8_t>(p[b])) << (8 * b);
  }
  U v;
  std::memcpy(&v, &bits, sizeof(U));
  return v;
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), "read failed");
  return bytes;
}

/// Writes to a sibling temp file then renames, so readers never see partial output.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), "rename failed: " + ec.message());
}

}  // namespace detail

template <typename T>
std::vector<char> encode_raster(const Raster<T>& r, int rank) {
  std::vector<char> out = {'D', 'W', 'D', 'M'};
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(rank));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.rows()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.cols()));
  if (rank == 3) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.depth()));
  out.reserve(out.size() + r.size() * sizeof(T));
  for (const T& v : r.data()) detail::put_le<T>(out, v);
  return out;
}

template <typename T>
Raster<T> decode_raster(const std::vector<char>& bytes, int expected_rank, const std::string& source) {
  auto fail = [&](const std::string& why) { return FormatError(source + ": " + why); };
  if (bytes.size() < 6 || std::memcmp(bytes.data(), "DWDM", 4) != 0) throw fail("bad magic");
  const auto dtype = static_cast<std::uint8_t>(bytes[4]);
  const auto rank = static_cast<std::uint8_t>(bytes[5]);
  if (dtype != static_cast<std::uint8_t>(dtype_of<T>())) {
    throw fail("dtype tag " + std::to_string(dtype) + " does not match requested map type");
  }
  if (rank != expected_rank) throw fail("rank " + std::to_string(rank) + " unexpected");
  const std::size_t header = 6 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw fail("truncated header");
  std::array<std::uint32_t, 3> shape = {0, 0, 1};
  for (int k = 0; k < rank; ++k) shape[k] = detail::get_le<std::uint32_t>(bytes.data() + 6 + 4 * k);
  const std::size_t count = static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  if (bytes.size() != header + count * sizeof(T)) throw fail("payload size does not match shape");
  if (shape[2] < 1) throw fail("zero depth");
  Raster<T> r(static_cast<int>(shape[0]), static_cast<int>(shape[1]), static_cast<int>(shape[2]));
  const char* p = bytes.data() + header;
  for (auto& v : r.data()) {
    v = detail::get_le<T>(p);
    p += sizeof(T);
  }
  return r;
}

/// Writes any map type to `path` in the DWDM format.
template <typename Map>
void save_map(const Map& map, const std::filesystem::path& path) {
  using Traits = MapTraits<Map>;
  detail::write_file_atomic(
      path, encode_raster(static_cast<const Raster<typename Traits::value>&>(map), Traits::rank));
}

template <typename Map>
Map load_map(const std::filesystem::path& path) {
  using Traits = MapTraits<Map>;
  auto raster = decode_raster<typename Traits::value>(detail::read_file(path), Traits::rank,
                                                      path.string());
  if constexpr (std::is_same_v<Map, BBoxMap>) {
    if (raster.depth() != 2) throw FormatError(path.string() + ": bbox map depth must be 2");
  }
  if constexpr (std::is_same_v<Map, BinaryMask>) {
    BinaryMask m(raster.rows(), raster.cols());
    m.storage() = std::move(raster.storage());
    return m;
  } else {
    return Map(std::move(raster));
  }
}

}  // namespace dwd
