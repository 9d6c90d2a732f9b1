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


#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace dwd {
namespace {

using test::Rng;

BinaryMask mask_from(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j] == '#';
  }
  return m;
}

ComponentLabeling labeling_of(const BinaryMask& m) { return label_components(m); }

DwdConfig config(int e_max, int radius, int cut) {
  DwdConfig cfg;
  cfg.e_max = e_max;
  cfg.radius = radius;
  cfg.cut_level = cut;
  return cfg;
}

TEST(Cut, AllZeroEnergyGivesEmptyMask) {
  const auto m = cut_and_binarize(EnergyMap(5, 5), 1, 8);
  for (auto v : m.storage()) EXPECT_EQ(v, 0);
}

TEST(Cut, SingleConeGivesRadiusTwoDisk) {
  const auto cfg = config(8, 4, 4);
  const std::vector<Annotation> anns{{1, 10, 10, 3, 3}};
  const auto m = cut_and_binarize(synthesize_energy(anns, 21, 21, cfg), 4, 8);
  for (int i = 0; i < 21; ++i) {
    for (int j = 0; j < 21; ++j) EXPECT_EQ(m(i, j) != 0, std::hypot(i - 10, j - 10) <= 2.0) << i << "," << j;
  }
}

TEST(Cut, TopLevelKeepsOnlyCenters) {
  const auto cfg = config(8, 4, 8);
  const std::vector<Annotation> anns{{1, 3, 3, 3, 3}, {1, 12, 14, 3, 3}};
  const auto m = cut_and_binarize(synthesize_energy(anns, 20, 20, cfg), 8, 8);
  int on = 0;
  for (auto v : m.storage()) on += v;
  EXPECT_EQ(on, 2);
  EXPECT_TRUE(m(3, 3));
  EXPECT_TRUE(m(12, 14));
}

TEST(Cut, LevelOutOfRangeIsValidationError) {
  EXPECT_THROW(cut_and_binarize(EnergyMap(2, 2), 0, 8), ValidationError);
  EXPECT_THROW(cut_and_binarize(EnergyMap(2, 2), 9, 8), ValidationError);
}

TEST(Cut, RaisingLevelNeverGrowsComponents) {
  Rng rng(6);
  const auto cfg = config(8, 5, 1);
  const auto anns = test::random_annotations(rng, 50, 50, 20, 3.0);
  const auto e = synthesize_energy(anns, 50, 50, cfg);
  for (int level = 1; level < 8; ++level) {
    const auto lo = cut_and_binarize(e, level, 8), hi = cut_and_binarize(e, level + 1, 8);
    for (std::size_t k = 0; k < lo.size(); ++k) EXPECT_LE(hi.data()[k], lo.data()[k]);
  }
}

TEST(Labeling, EmptyMask) {
  const auto lab = labeling_of(BinaryMask(6, 6));
  EXPECT_EQ(lab.component_count, 0);
}

TEST(Labeling, TwoDisjointBlocks) {
  const auto lab = labeling_of(mask_from({"##...", "##...", ".....", "...##", "...##"}));
  EXPECT_EQ(lab.component_count, 2);
  EXPECT_EQ(lab.labels(0, 0), 1);
  EXPECT_EQ(lab.labels(4, 4), 2);
}

TEST(Labeling, UShapeMergesIntoOneComponent) {
  const auto m = mask_from({"#...#", "#...#", "#...#", "#####"});
  const auto lab = labeling_of(m);
  EXPECT_EQ(lab.component_count, 1);
  int count = 0;
  EXPECT_TRUE(test::same_partition(lab.labels, test::flood_fill_labels(m, count)));
}

TEST(Labeling, DiagonalNeighboursAreSeparate) {
  const auto lab = labeling_of(mask_from({"#.", ".#"}));
  EXPECT_EQ(lab.component_count, 2);
}

TEST(Labeling, RasterOrderNumberingWithoutGaps) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = test::random_mask(rng, 20, 20, 0.45);
    const auto lab = labeling_of(m);
    int next = 1;
    for (auto v : lab.labels.storage()) {
      ASSERT_LE(v, next);
      if (v == next) ++next;
    }
    EXPECT_EQ(next - 1, lab.component_count);
  }
}

TEST(Labeling, MatchesFloodFillOracle) {
  Rng rng(1234);
  for (double density : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (int trial = 0; trial < 40; ++trial) {
      const auto m = test::random_mask(rng, test::uniform_int(rng, 1, 48), test::uniform_int(rng, 1, 48), density);
      int count = 0;
      const auto oracle = test::flood_fill_labels(m, count);
      const auto lab = labeling_of(m);
      ASSERT_EQ(lab.component_count, count);
      ASSERT_TRUE(test::same_partition(lab.labels, oracle));
      // Both number components by the raster position of their first pixel.
      ASSERT_EQ(lab.labels, oracle);
    }
  }
}

TEST(Centers, Examples) {
  auto centers = component_centers(labeling_of(mask_from({"##", "##"})));
  ASSERT_EQ(centers.size(), 1u);
  EXPECT_EQ(centers[0].i, 0.5);
  EXPECT_EQ(centers[0].j, 0.5);

  BinaryMask single(5, 9);
  single(3, 7) = 1;
  centers = component_centers(labeling_of(single));
  EXPECT_EQ(centers[0].i, 3.0);
  EXPECT_EQ(centers[0].j, 7.0);

  ComponentLabeling lab{Raster<std::int32_t>(1, 4, 1, 0), 1};
  lab.labels(0, 0) = 1;
  lab.labels(0, 3) = 1;
  centers = component_centers(lab);
  EXPECT_EQ(centers[0].i, 0.0);
  EXPECT_EQ(centers[0].j, 1.5);
}

TEST(Votes, MajorityTieAndBackground) {
  ComponentLabeling lab{Raster<std::int32_t>(1, 3, 1, 1), 1};
  ClassMap c(1, 3);
  c(0, 0) = 3, c(0, 1) = 3, c(0, 2) = 5;
  EXPECT_EQ(vote_classes(lab, c)[0], 3);

  c(0, 0) = 5, c(0, 1) = 3, c(0, 2) = 0;
  EXPECT_EQ(vote_classes(lab, c)[0], 3);

  ClassMap bg(1, 3);
  EXPECT_EQ(vote_classes(lab, bg)[0], 0);

  EXPECT_THROW(vote_classes(lab, ClassMap(2, 3)), ValidationError);
}

TEST(Boxes, AveragesMemberDims) {
  ComponentLabeling lab{Raster<std::int32_t>(1, 3, 1, 1), 1};
  BBoxMap b(1, 3);
  const double dims[3][2] = {{4, 6}, {4, 6}, {10, 2}};
  for (int j = 0; j < 3; ++j) b(0, j, 0) = dims[j][0], b(0, j, 1) = dims[j][1];
  const auto avg = average_bboxes(lab, b);
  EXPECT_DOUBLE_EQ(avg[0].width, 6.0);
  EXPECT_DOUBLE_EQ(avg[0].height, 14.0 / 3.0);

  lab.labels(0, 2) = 0;
  b(0, 0, 0) = 10, b(0, 0, 1) = 20, b(0, 1, 0) = 12, b(0, 1, 1) = 22;
  const auto two = average_bboxes(lab, b);
  EXPECT_EQ(two[0].width, 11.0);
  EXPECT_EQ(two[0].height, 21.0);
  EXPECT_THROW(average_bboxes(lab, BBoxMap(3, 3)), ValidationError);
}

TEST(Decode, SingleObjectRoundTrip) {
  const auto cfg = config(8, 3, 4);
  const std::vector<Annotation> anns{{7, 10, 10, 4, 6}};
  auto cfg7 = cfg;
  cfg7.num_classes = 7;
  const auto t = encode_targets(anns, 30, 30, cfg7);
  const auto dets = decode(t.energy, t.classes, t.boxes, cfg7);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].class_id, 7);
  EXPECT_NEAR(dets[0].center_i, 10, 1);
  EXPECT_NEAR(dets[0].center_j, 10, 1);
  EXPECT_EQ(dets[0].width, 4);
  EXPECT_EQ(dets[0].height, 6);
  EXPECT_EQ(dets[0].confidence, 1.0);
}

TEST(Decode, AllZeroMapsGiveNothing) {
  EXPECT_TRUE(decode(EnergyMap(8, 8), ClassMap(8, 8), BBoxMap(8, 8), DwdConfig{}).empty());
}

TEST(Decode, TwoObjectsJustApart) {
  const auto cfg = config(8, 3, 4);
  const std::vector<Annotation> anns{{2, 10, 10, 4, 6}, {4, 10, 10.0 + 2 * cfg.radius + 2, 5, 3}};
  const auto t = encode_targets(anns, 30, 30, cfg);
  auto dets = decode(t.energy, t.classes, t.boxes, cfg);
  ASSERT_EQ(dets.size(), 2u);
  std::sort(dets.begin(), dets.end(), [](auto& a, auto& b) { return a.center_j < b.center_j; });
  EXPECT_EQ(dets[0].class_id, 2);
  EXPECT_EQ(dets[1].class_id, 4);
}

TEST(Decode, BackgroundMajorityComponentIsDropped) {
  EnergyMap e(5, 5);
  e(2, 2) = 8;
  BBoxMap b(5, 5);
  b(2, 2, 0) = b(2, 2, 1) = 3;
  EXPECT_TRUE(decode(e, ClassMap(5, 5), b, DwdConfig{}).empty());
  ClassMap c(5, 5);
  c(2, 2) = 1;
  EXPECT_EQ(decode(e, c, b, DwdConfig{}).size(), 1u);
  EXPECT_TRUE(decode(e, c, BBoxMap(5, 5), DwdConfig{}).empty());
}

TEST(Decode, DimensionMismatchIsValidationError) {
  EXPECT_THROW(decode(EnergyMap(4, 4), ClassMap(4, 5), BBoxMap(4, 4), DwdConfig{}), ValidationError);
}

TEST(Decode, SortedByConfidence) {
  EnergyMap e(5, 9);
  ClassMap c(5, 9);
  BBoxMap b(5, 9);
  const double peaks[] = {5, 8, 6};
  for (int k = 0; k < 3; ++k) {
    e(2, 1 + 3 * k) = peaks[k];
    c(2, 1 + 3 * k) = 1;
    b(2, 1 + 3 * k, 0) = b(2, 1 + 3 * k, 1) = 2;
  }
  const auto dets = decode(e, c, b, DwdConfig{});
  ASSERT_EQ(dets.size(), 3u);
  EXPECT_EQ(dets[0].confidence, 1.0);
  EXPECT_EQ(dets[1].confidence, 6.0 / 8);
  EXPECT_EQ(dets[2].confidence, 5.0 / 8);
}

TEST(DecodeProperties, RoundTripOnSeparatedLatticeCenters) {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    auto cfg = config(test::uniform_int(rng, 2, 10), test::uniform_int(rng, 1, 5), 1);
    cfg.cut_level = test::uniform_int(rng, 1, cfg.e_max);
    const int rows = test::uniform_int(rng, 12, 80), cols = test::uniform_int(rng, 12, 80);
    // Cones clipped by the border are not symmetric, so centers keep r from it.
    const auto anns = test::random_annotations(rng, rows, cols, 12, 2 * cfg.radius + 1.01, 5, cfg.radius);
    const auto t = encode_targets(anns, rows, cols, cfg);
    const auto dets = decode(t.energy, t.classes, t.boxes, cfg);
    ASSERT_EQ(dets.size(), anns.size());
    for (const auto& a : anns) {
      const auto it = std::find_if(dets.begin(), dets.end(), [&](const Detection& d) {
        return std::hypot(d.center_i - a.center_i, d.center_j - a.center_j) <= 1.0;
      });
      ASSERT_NE(it, dets.end());
      EXPECT_EQ(it->class_id, a.class_id);
      EXPECT_EQ(it->width, a.width);
      EXPECT_EQ(it->height, a.height);
    }
  }
}

TEST(DecodeProperties, TransposeCommutesWithDecode) {
  Rng rng(31);
  const auto cfg = config(8, 3, 4);
  const auto anns = test::random_annotations(rng, 40, 50, 10, 4.0);
  const auto t = encode_targets(anns, 40, 50, cfg);
  EnergyMap et(50, 40);
  ClassMap ct(50, 40);
  BBoxMap bt(50, 40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 50; ++j) {
      et(j, i) = t.energy(i, j);
      ct(j, i) = t.classes(i, j);
      bt(j, i, 0) = t.boxes(i, j, 0);
      bt(j, i, 1) = t.boxes(i, j, 1);
    }
  }
  auto key = [](const Detection& d) { return std::tuple(d.center_i, d.center_j); };
  auto a = decode(t.energy, t.classes, t.boxes, cfg);
  auto b = decode(et, ct, bt, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (auto& d : b) std::swap(d.center_i, d.center_j);
  auto by_pos = [&](const Detection& x, const Detection& y) { return key(x) < key(y); };
  std::sort(a.begin(), a.end(), by_pos);
  std::sort(b.begin(), b.end(), by_pos);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].class_id, b[k].class_id);
    EXPECT_DOUBLE_EQ(a[k].center_i, b[k].center_i);
    EXPECT_DOUBLE_EQ(a[k].center_j, b[k].center_j);
    EXPECT_DOUBLE_EQ(a[k].width, b[k].width);
    EXPECT_DOUBLE_EQ(a[k].height, b[k].height);
    EXPECT_EQ(a[k].confidence, b[k].confidence);
  }
}

TEST(UnionFindTest, Basics) {
  UnionFind uf(6);
  uf.unite(0, 1);
  uf.unite(2, 3);
  uf.unite(1, 3);
  EXPECT_EQ(uf.find(0), uf.find(2));
  EXPECT_NE(uf.find(0), uf.find(4));
  const auto id = uf.make_set();
  EXPECT_EQ(id, 6u);
  EXPECT_EQ(uf.find(id), id);
}

}  // namespace
}  // namespace dwd
