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

// End-to-end helpers tying the stages together for one page.

#include <vector>

#include "dwd/decoder.hpp"
#include "dwd/encoder.hpp"
#include "dwd/network.hpp"
#include "dwd/scoregen.hpp"
#include "dwd/types.hpp"

namespace dwd {

/// Scales detections by `factor` (centers and sizes).
inline std::vector<Detection> rescale_detections(std::vector<Detection> dets, double factor) {
  if (factor == 1.0) return dets;
  for (auto& d : dets) {
    d.center_i *= factor;
    d.center_j *= factor;
    d.width *= factor;
    d.height *= factor;
  }
  return dets;
}

/// Network inference on one page: normalize to the training interline, run
/// the heads, decode, and map detections back to page coordinates.
template <typename T>
std::vector<Detection> detect(const Network<T>& net, const PageImage& page, const DwdConfig& cfg) {
  const auto norm = interline_normalize(page, {}, cfg.target_interline);
  const auto maps = to_maps(net.predict(norm.image));
  auto dets = decode(maps.energy, maps.classes, maps.boxes, cfg);
  return rescale_detections(std::move(dets), page.interline / cfg.target_interline);
}

/// Ground-truth round trip: encode annotations, decode the targets.
inline std::vector<Detection> encode_decode(const std::vector<Annotation>& annotations, int rows, int cols,
                                            const DwdConfig& cfg) {
  const auto t = encode_targets(annotations, rows, cols, cfg);
  return decode(t.energy, t.classes, t.boxes, cfg);
}

}  // namespace dwd
