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

// Flat key=value run configuration. Command-line flags use the same keys
// (--key value) and override file values.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dwd/annotation_io.hpp"
#include "dwd/error.hpp"
#include "dwd/network.hpp"
#include "dwd/scoregen.hpp"
#include "dwd/train.hpp"
#include "dwd/types.hpp"

namespace dwd {

struct RunConfig {
  DwdConfig dwd;
  GenConfig gen;
  std::string network = "micro";
  TrainSchedule schedule{parse_phases("e:1000,c:1000,b:1000,e-again:1000,total:2000"), 128, 1};
  int pages = 10;
  int jobs = 1;
  int checkpoint_every = 0;
  std::uint64_t seed = 1;
};

using ConfigValues = std::map<std::string, std::string>;

namespace detail {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw ValidationError("config key '" + key + "': expected true/false, got '" + text + "'");
  } else {
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      throw ValidationError("config key '" + key + "': cannot parse '" + text + "'");
    }
    return v;
  }
}

template <typename T>
std::string show_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else if constexpr (std::is_floating_point_v<T>) return format_number(v);
  else if constexpr (std::is_same_v<T, std::string>) return v;
  else return std::to_string(v);
}

struct KeySpec {
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
KeySpec field(std::string key, std::string help, T RunConfig::*outer) {
  return {key, help,
          [key, outer](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, std::string>) c.*outer = v;
            else c.*outer = parse_value<T>(key, v);
          },
          [outer](const RunConfig& c) { return show_value(c.*outer); }};
}

template <typename Outer, typename T>
KeySpec nested(std::string key, std::string help, Outer RunConfig::*outer, T Outer::*inner) {
  return {key, help,
          [key, outer, inner](RunConfig& c, const std::string& v) { (c.*outer).*inner = parse_value<T>(key, v); },
          [outer, inner](const RunConfig& c) { return show_value((c.*outer).*inner); }};
}

}  // namespace detail

/// Every recognized key, in echo order.
inline const std::vector<detail::KeySpec>& config_keys() {
  using detail::field;
  using detail::nested;
  static const std::vector<detail::KeySpec> keys = {
      field("seed", "base random seed", &RunConfig::seed),
      field("jobs", "worker threads for page-parallel commands", &RunConfig::jobs),
      field("pages", "pages to generate", &RunConfig::pages),
      nested("e_max", "peak energy", &RunConfig::dwd, &DwdConfig::e_max),
      nested("radius", "cone radius in pixels", &RunConfig::dwd, &DwdConfig::radius),
      nested("cut_level", "energy cut level (default ceil(e_max/2))", &RunConfig::dwd, &DwdConfig::cut_level),
      nested("num_classes", "symbol classes (class head has num_classes+1 channels)", &RunConfig::dwd,
             &DwdConfig::num_classes),
      nested("w1", "energy loss weight", &RunConfig::dwd, &DwdConfig::w1),
      nested("w2", "class loss weight", &RunConfig::dwd, &DwdConfig::w2),
      nested("w3", "bbox loss weight", &RunConfig::dwd, &DwdConfig::w3),
      nested("learning_rate", "RMSProp learning rate", &RunConfig::dwd, &DwdConfig::learning_rate),
      nested("decay_rate", "RMSProp decay rate", &RunConfig::dwd, &DwdConfig::decay_rate),
      nested("mean_momentum", "running-mean momentum", &RunConfig::dwd, &DwdConfig::mean_momentum),
      nested("crop_size", "training crop size", &RunConfig::dwd, &DwdConfig::crop_size),
      nested("target_interline", "interline pages are rescaled to", &RunConfig::dwd,
             &DwdConfig::target_interline),
      nested("page_rows", "generated page height", &RunConfig::gen, &GenConfig::rows),
      nested("page_cols", "generated page width", &RunConfig::gen, &GenConfig::cols),
      nested("interline", "generated page interline", &RunConfig::gen, &GenConfig::interline),
      nested("symbols_min", "fewest symbols per page", &RunConfig::gen, &GenConfig::symbols_min),
      nested("symbols_max", "most symbols per page", &RunConfig::gen, &GenConfig::symbols_max),
      nested("skew", "class frequency skew exponent", &RunConfig::gen, &GenConfig::skew),
      nested("min_separation", "minimum center distance in pixels", &RunConfig::gen,
             &GenConfig::min_separation),
      nested("collision_free", "keep boxes apart", &RunConfig::gen, &GenConfig::collision_free),
      nested("noise", "salt-and-pepper probability", &RunConfig::gen, &GenConfig::noise),
      field("network", "network preset: micro, micro-plain, tiny", &RunConfig::network),
      {"schedule", "training phases, e.g. e:1000,c:1000,b:1000,e-again:1000,total:2000",
       [](RunConfig& c, const std::string& v) { c.schedule.phases = parse_phases(v); },
       [](const RunConfig& c) { return format_phases(c.schedule.phases); }},
      field("checkpoint_every", "extra checkpoint interval in iterations (0 = phase ends only)",
            &RunConfig::checkpoint_every),
  };
  return keys;
}

inline ConfigValues parse_config_text(std::istream& in, const std::string& source) {
  ConfigValues values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key=value");
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

inline ConfigValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config");
  return parse_config_text(in, path.string());
}

/// Applies values on top of defaults. Unknown keys are rejected.
inline RunConfig resolve_config(const ConfigValues& values) {
  RunConfig cfg;
  const auto& keys = config_keys();
  for (const auto& [k, v] : values) {
    auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& spec) { return spec.key == k; });
    if (it == keys.end()) throw ValidationError("unknown config key '" + k + "'");
    it->set(cfg, v);
  }
  if (!values.count("cut_level")) cfg.dwd.cut_level = (cfg.dwd.e_max + 1) / 2;
  if (!values.count("min_separation")) cfg.gen.min_separation = 2.0 * cfg.dwd.radius + 1.0;
  cfg.gen.seed = cfg.seed;
  cfg.schedule.seed = cfg.seed;
  cfg.schedule.crop_size = cfg.dwd.crop_size;
  if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");
  if (cfg.pages < 0) throw ValidationError("pages must be >= 0");
  cfg.dwd.validate();
  cfg.gen.validate();
  cfg.schedule.validate();
  network_preset(cfg.network, cfg.dwd);
  return cfg;
}

/// Fully resolved configuration as key=value lines.
inline std::string echo_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : config_keys()) out += k.key + "=" + k.get(cfg) + "\n";
  return out;
}

}  // namespace dwd
