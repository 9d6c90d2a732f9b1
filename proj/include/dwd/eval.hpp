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

// Detection metrics: IoU on axis-aligned boxes, greedy confidence-ordered
// matching, all-point interpolated average precision and per-class reports.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dwd/log.hpp"
#include "dwd/types.hpp"

namespace dwd {

/// Corner-form box in continuous pixel coordinates.
struct Box {
  double top = 0.0;
  double left = 0.0;
  double bottom = 0.0;
  double right = 0.0;

  double area() const noexcept {
    return std::max(0.0, bottom - top) * std::max(0.0, right - left);
  }
};

inline Box box_of(double center_i, double center_j, double width, double height) {
  return {center_i - height / 2, center_j - width / 2, center_i + height / 2, center_j + width / 2};
}
inline Box box_of(const Annotation& a) { return box_of(a.center_i, a.center_j, a.width, a.height); }
inline Box box_of(const Detection& d) { return box_of(d.center_i, d.center_j, d.width, d.height); }

/// Intersection over union; 0 when either box has zero area.
inline double iou(const Box& a, const Box& b) {
  const double area_a = a.area(), area_b = b.area();
  if (area_a <= 0 || area_b <= 0) return 0.0;
  const double h = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  const double w = std::min(a.right, b.right) - std::max(a.left, b.left);
  if (h <= 0 || w <= 0) return 0.0;
  const double inter = h * w;
  return inter / (area_a + area_b - inter);
}

/// Matching of one class on one page. Entries follow descending confidence.
struct MatchResult {
  std::vector<double> confidence;
  std::vector<int> matched_gt;  // -1 for a false positive
  std::vector<bool> true_positive;
  int gt_count = 0;
};

/// Greedy matching: detections in descending confidence (stable) each look
/// up the ground truth with the highest IoU. That is a hit if the IoU reaches
/// `threshold` and no earlier detection claimed it; otherwise a false positive.
inline MatchResult match_detections(std::vector<Detection> dets, const std::vector<Annotation>& gts,
                                    double threshold) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  MatchResult m;
  m.gt_count = static_cast<int>(gts.size());
  std::vector<bool> taken(gts.size(), false);
  for (const auto& d : dets) {
    const Box db = box_of(d);
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(db, box_of(gts[g]));
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    const bool tp = best >= 0 && best_iou >= threshold && !taken[best];
    if (tp) taken[best] = true;
    m.confidence.push_back(d.confidence);
    m.matched_gt.push_back(tp ? best : -1);
    m.true_positive.push_back(tp);
  }
  return m;
}

/// All-point interpolated AP of a ranked TP/FP sequence against `gt_count`
/// ground truths. Absent when there is no ground truth.
inline std::optional<double> average_precision_ranked(const std::vector<bool>& ranked_tp, int gt_count) {
  if (gt_count <= 0) return std::nullopt;
  const std::size_t n = ranked_tp.size();
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += ranked_tp[k] ? 1 : 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / gt_count;
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (recall[k] > prev_recall) {
      ap += (recall[k] - prev_recall) * precision[k];
      prev_recall = recall[k];
    }
  }
  return ap;
}

/// AP of one class pooled over pages: detections are ranked by confidence
/// (stable in page order).
inline std::optional<double> average_precision(const std::vector<MatchResult>& pages) {
  struct Ranked {
    double confidence;
    bool tp;
  };
  std::vector<Ranked> all;
  int gt = 0;
  for (const auto& m : pages) {
    gt += m.gt_count;
    for (std::size_t k = 0; k < m.confidence.size(); ++k) all.push_back({m.confidence[k], m.true_positive[k]});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });
  std::vector<bool> ranked;
  for (const auto& r : all) ranked.push_back(r.tp);
  return average_precision_ranked(ranked, gt);
}

struct EvalPage {
  std::string id;
  std::vector<Detection> detections;
  std::vector<Annotation> truth;
};

struct ClassResult {
  int class_id = 0;
  std::string name;
  std::optional<double> ap50;
  std::optional<double> ap25;
  int gt_count = 0;
  int det_count = 0;
};

struct EvalReport {
  std::vector<ClassResult> classes;  // descending AP@0.5, absent last
  std::optional<double> map50;
  std::optional<double> map25;
};

inline constexpr double kOverlapHigh = 0.5;
inline constexpr double kOverlapLow = 0.25;

inline std::optional<double> mean_ap(const std::vector<ClassResult>& classes,
                                     std::optional<double> ClassResult::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : classes) {
    if (c.*field) {
      sum += *(c.*field);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

/// Per-class AP at overlaps 0.5 and 0.25 and their means over classes that
/// have ground truth. Classes that occur only among detections keep an
/// absent AP and stay out of the means.
inline EvalReport evaluate(const std::vector<EvalPage>& pages,
                           const std::function<std::string(int)>& class_name = {}) {
  std::set<int> class_ids;
  for (const auto& p : pages) {
    for (const auto& d : p.detections) class_ids.insert(d.class_id);
    for (const auto& a : p.truth) class_ids.insert(a.class_id);
  }
  EvalReport report;
  for (int cls : class_ids) {
    ClassResult r;
    r.class_id = cls;
    r.name = class_name ? class_name(cls) : "class" + std::to_string(cls);
    std::vector<MatchResult> high, low;
    for (const auto& p : pages) {
      std::vector<Detection> dets;
      std::vector<Annotation> gts;
      for (const auto& d : p.detections) {
        if (d.class_id == cls) dets.push_back(d);
      }
      for (const auto& a : p.truth) {
        if (a.class_id == cls) gts.push_back(a);
      }
      r.gt_count += static_cast<int>(gts.size());
      r.det_count += static_cast<int>(dets.size());
      high.push_back(match_detections(dets, gts, kOverlapHigh));
      low.push_back(match_detections(dets, gts, kOverlapLow));
    }
    r.ap50 = average_precision(high);
    r.ap25 = average_precision(low);
    if (r.gt_count == 0) {
      log::warn("evaluate: class " + std::to_string(cls) + " has " + std::to_string(r.det_count) +
                " detection(s) but no ground truth; counted as false positives, excluded from mAP");
    }
    report.classes.push_back(r);
  }
  std::stable_sort(report.classes.begin(), report.classes.end(),
                   [](const ClassResult& a, const ClassResult& b) {
                     const double x = a.ap50.value_or(-1.0), y = b.ap50.value_or(-1.0);
                     if (x != y) return x > y;
                     return a.class_id < b.class_id;
                   });
  report.map50 = mean_ap(report.classes, &ClassResult::ap50);
  report.map25 = mean_ap(report.classes, &ClassResult::ap25);
  return report;
}

namespace detail {
inline std::string fixed(std::optional<double> v, int digits = 4) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *v);
  return buf;
}
}  // namespace detail

/// class_id,class_name,ap50,ap25,gt_count,det_count
inline std::string report_csv(const EvalReport& r) {
  std::string out = "class_id,class_name,ap50,ap25,gt_count,det_count\n";
  for (const auto& c : r.classes) {
    out += std::to_string(c.class_id) + "," + c.name + "," + detail::fixed(c.ap50, 6) + "," +
           detail::fixed(c.ap25, 6) + "," + std::to_string(c.gt_count) + "," +
           std::to_string(c.det_count) + "\n";
  }
  return out;
}

/// Two side-by-side rankings (by AP@1/2 and by AP@1/4), top `k` rows, then
/// the means.
inline std::string report_table(const EvalReport& r, std::size_t k = 20) {
  auto by50 = r.classes;
  auto by25 = r.classes;
  std::stable_sort(by25.begin(), by25.end(), [](const ClassResult& a, const ClassResult& b) {
    const double x = a.ap25.value_or(-1.0), y = b.ap25.value_or(-1.0);
    if (x != y) return x > y;
    return a.class_id < b.class_id;
  });
  std::size_t name_w = 5;
  for (const auto& c : r.classes) name_w = std::max(name_w, c.name.size());
  char line[512];
  std::string out;
  std::snprintf(line, sizeof(line), "%*s  %8s | %*s  %8s\n", static_cast<int>(name_w), "Class", "AP@1/2",
                static_cast<int>(name_w), "Class", "AP@1/4");
  out += line;
  out += std::string(name_w * 2 + 25, '-') + "\n";
  const std::size_t rows = std::min(k, r.classes.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::snprintf(line, sizeof(line), "%*s  %8s | %*s  %8s\n", static_cast<int>(name_w),
                  by50[i].name.c_str(), detail::fixed(by50[i].ap50).c_str(), static_cast<int>(name_w),
                  by25[i].name.c_str(), detail::fixed(by25[i].ap25).c_str());
    out += line;
  }
  out += std::string(name_w * 2 + 25, '-') + "\n";
  std::snprintf(line, sizeof(line), "%*s  %8s | %*s  %8s\n", static_cast<int>(name_w), "mAP",
                detail::fixed(r.map50).c_str(), static_cast<int>(name_w), "mAP",
                detail::fixed(r.map25).c_str());
  out += line;
  return out;
}

}  // namespace dwd
