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

// Line-oriented annotation and detection files:
//
//   # comment
//   page H W interline
//   class_id center_i center_j width height [confidence]

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dwd/error.hpp"
#include "dwd/map_io.hpp"
#include "dwd/types.hpp"

namespace dwd {

struct PageHeader {
  int rows = 0;
  int cols = 0;
  double interline = 0.0;
  friend bool operator==(const PageHeader&, const PageHeader&) = default;
};

struct AnnotationFile {
  std::optional<PageHeader> page;
  std::vector<Annotation> annotations;
};

struct DetectionFile {
  std::optional<PageHeader> page;
  std::vector<Detection> detections;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Walks records, handing each non-empty, non-header line's fields to `on_record`.
template <typename OnRecord>
std::optional<PageHeader> parse_records(std::istream& in, const std::string& source,
                                        OnRecord&& on_record) {
  std::optional<PageHeader> page;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    auto fields = split_fields(view);
    if (fields.empty()) continue;
    if (fields[0] == "page") {
      PageHeader h;
      if (fields.size() != 4 || !parse_field(fields[1], h.rows) || !parse_field(fields[2], h.cols) ||
          !parse_field(fields[3], h.interline)) {
        throw ParseError(source, lineno, "expected 'page H W interline'");
      }
      if (h.rows < 1 || h.cols < 1 || !(h.interline > 0)) {
        throw ParseError(source, lineno, "page dimensions and interline must be positive");
      }
      if (page) throw ParseError(source, lineno, "duplicate page header");
      page = h;
      continue;
    }
    on_record(fields, lineno);
  }
  return page;
}

inline Annotation parse_annotation_fields(const std::vector<std::string_view>& f,
                                          const std::string& source, int lineno) {
  Annotation a;
  if (!parse_field(f[0], a.class_id) || !parse_field(f[1], a.center_i) ||
      !parse_field(f[2], a.center_j) || !parse_field(f[3], a.width) ||
      !parse_field(f[4], a.height)) {
    throw ParseError(source, lineno, "malformed numeric field");
  }
  return a;
}

}  // namespace detail

inline AnnotationFile parse_annotations(std::istream& in, const std::string& source = "<stream>") {
  AnnotationFile file;
  std::vector<int> lines;
  file.page = detail::parse_records(in, source, [&](const auto& fields, int lineno) {
    if (fields.size() != 5) {
      throw ParseError(source, lineno, "expected 'class_id center_i center_j width height'");
    }
    file.annotations.push_back(detail::parse_annotation_fields(fields, source, lineno));
    lines.push_back(lineno);
  });
  for (std::size_t k = 0; k < file.annotations.size(); ++k) {
    try {
      if (file.page) {
        validate_annotation(file.annotations[k], file.page->rows, file.page->cols);
      } else {
        validate_annotation(file.annotations[k]);
      }
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(lines[k]) + ": " + e.what());
    }
  }
  return file;
}

inline AnnotationFile load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  return parse_annotations(in, path.string());
}

inline DetectionFile parse_detections(std::istream& in, const std::string& source = "<stream>") {
  DetectionFile file;
  file.page = detail::parse_records(in, source, [&](const auto& fields, int lineno) {
    if (fields.size() != 6) {
      throw ParseError(source, lineno,
                       "expected 'class_id center_i center_j width height confidence'");
    }
    Annotation a = detail::parse_annotation_fields(fields, source, lineno);
    Detection d{a.class_id, a.center_i, a.center_j, a.width, a.height, 0.0};
    if (!detail::parse_field(fields[5], d.confidence)) {
      throw ParseError(source, lineno, "malformed confidence");
    }
    if (d.width < 0 || d.height < 0 || d.confidence < 0 || d.confidence > 1) {
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": detection needs width, height >= 0 and confidence in [0,1]");
    }
    file.detections.push_back(d);
  });
  return file;
}

inline DetectionFile load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  return parse_detections(in, path.string());
}

inline std::string format_page_header(const PageHeader& h) {
  return "page " + std::to_string(h.rows) + " " + std::to_string(h.cols) + " " +
         format_number(h.interline) + "\n";
}

inline std::string format_annotations(const std::optional<PageHeader>& page,
                                      const std::vector<Annotation>& annotations) {
  std::string out;
  if (page) out += format_page_header(*page);
  for (const auto& a : annotations) {
    out += std::to_string(a.class_id) + " " + format_number(a.center_i) + " " +
           format_number(a.center_j) + " " + format_number(a.width) + " " +
           format_number(a.height) + "\n";
  }
  return out;
}

inline std::string format_detections(const std::optional<PageHeader>& page,
                                     const std::vector<Detection>& detections) {
  std::string out;
  if (page) out += format_page_header(*page);
  for (const auto& d : detections) {
    out += std::to_string(d.class_id) + " " + format_number(d.center_i) + " " +
           format_number(d.center_j) + " " + format_number(d.width) + " " +
           format_number(d.height) + " " + format_number(d.confidence) + "\n";
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  detail::write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

inline void save_annotations(const std::filesystem::path& path,
                             const std::optional<PageHeader>& page,
                             const std::vector<Annotation>& annotations) {
  write_text_file(path, format_annotations(page, annotations));
}

inline void save_detections(const std::filesystem::path& path,
                            const std::optional<PageHeader>& page,
                            const std::vector<Detection>& detections) {
  write_text_file(path, format_detections(page, detections));
}

}  // namespace dwd
