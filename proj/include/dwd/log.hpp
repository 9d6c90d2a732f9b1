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

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>

namespace dwd::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// DWD_LOG=error|warn|info|debug, default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("DWD_LOG");
    if (env == nullptr) return Level::kWarn;
    if (std::strcmp(env, "error") == 0) return Level::kError;
    if (std::strcmp(env, "info") == 0) return Level::kInfo;
    if (std::strcmp(env, "debug") == 0) return Level::kDebug;
    return Level::kWarn;
  }();
  return level;
}

inline void write(Level level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  static std::mutex mu;
  static const char* tags[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[dwd %s] %s\n", tags[static_cast<int>(level)], msg.c_str());
}

inline void error(const std::string& msg) { write(Level::kError, msg); }
inline void warn(const std::string& msg) { write(Level::kWarn, msg); }
inline void info(const std::string& msg) { write(Level::kInfo, msg); }
inline void debug(const std::string& msg) { write(Level::kDebug, msg); }

}  // namespace dwd::log
