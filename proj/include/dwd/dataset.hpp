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

// Dataset directory layout:
//   manifest.txt      one page id per line
//   pages/ID.png      8-bit grayscale page
//   pages/ID.txt      page header + annotations

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dwd/annotation_io.hpp"
#include "dwd/error.hpp"

namespace dwd {

inline std::string page_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu", index);
  return buf;
}

inline std::string format_manifest(const std::vector<std::string>& ids) {
  std::string out = "# dwd manifest\n";
  for (const auto& id : ids) out += id + "\n";
  return out;
}

inline std::vector<std::string> read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open manifest");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

inline void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& ids) {
  write_text_file(dir / "manifest.txt", format_manifest(ids));
}

struct DatasetPaths {
  std::filesystem::path root;
  std::filesystem::path image(const std::string& id) const { return root / "pages" / (id + ".png"); }
  std::filesystem::path annotations(const std::string& id) const { return root / "pages" / (id + ".txt"); }
};

// Map directory written by encode/predict: ID.energy.dwdm, ID.energy_oh.dwdm
// (encode only), ID.class.dwdm, ID.bbox.dwdm and ID.meta.txt holding the
// source page header.
struct MapPaths {
  std::filesystem::path root;
  std::filesystem::path energy(const std::string& id) const { return root / (id + ".energy.dwdm"); }
  std::filesystem::path quantized(const std::string& id) const { return root / (id + ".energy_oh.dwdm"); }
  std::filesystem::path classes(const std::string& id) const { return root / (id + ".class.dwdm"); }
  std::filesystem::path boxes(const std::string& id) const { return root / (id + ".bbox.dwdm"); }
  std::filesystem::path meta(const std::string& id) const { return root / (id + ".meta.txt"); }
};

}  // namespace dwd
