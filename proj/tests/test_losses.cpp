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

TEST(EnergyLoss, NearDeltaIsTiny) {
  QuantizedEnergyMap q(3, 4, 9);
  Tensor<double> logits({9, 3, 4}, -50.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      const int bin = (i * 4 + j) % 9;
      q(i, j, bin) = 1;
      logits.at(bin, i, j) = 50.0;
    }
  }
  EXPECT_LT(energy_loss(logits, q), 1e-9);
}

TEST(EnergyLoss, UniformLogitsGiveLogNine) {
  QuantizedEnergyMap q(5, 5, 9);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) q(i, j, (i + j) % 9) = 1;
  }
  EXPECT_NEAR(energy_loss(Tensor<double>({9, 5, 5}, 0.3), q), std::log(9.0), 1e-12);
}

TEST(EnergyLoss, SwappingPixelsInBothIsInvariant) {
  Rng rng(1);
  auto logits = test::random_tensor<double>(rng, {9, 4, 4}, -3, 3);
  QuantizedEnergyMap q(4, 4, 9);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) q(i, j, test::uniform_int(rng, 0, 8)) = 1;
  }
  const double before = energy_loss(logits, q);
  for (int c = 0; c < 9; ++c) {
    std::swap(logits.at(c, 0, 1), logits.at(c, 3, 2));
    std::swap(q(0, 1, c), q(3, 2, c));
  }
  EXPECT_NEAR(energy_loss(logits, q), before, 1e-14);
}

TEST(EnergyLoss, ShapeMismatchIsValidationError) {
  EXPECT_THROW(energy_loss(Tensor<double>({8, 3, 3}), QuantizedEnergyMap(3, 3, 9)), ValidationError);
  EXPECT_THROW(energy_loss(Tensor<double>({9, 3, 4}), QuantizedEnergyMap(3, 3, 9)), ValidationError);
}

TEST(ClassLoss, FullyMaskedIsZero) {
  Rng rng(2);
  EXPECT_EQ(class_loss(test::random_tensor<double>(rng, {6, 4, 4}), ClassMap(4, 4), EnergyMap(4, 4)), 0.0);
}

TEST(ClassLoss, OneForegroundPixelUniformLogits) {
  ClassMap c(3, 3);
  EnergyMap e(3, 3);
  c(1, 2) = 4;
  e(1, 2) = 2.5;
  EXPECT_NEAR(class_loss(Tensor<double>({6, 3, 3}, 1.7), c, e), std::log(6.0), 1e-12);
}

TEST(BBoxLoss, IdentityAndArithmetic) {
  BBoxMap b(2, 2);
  EnergyMap e(2, 2);
  b(0, 1, 0) = 4, b(0, 1, 1) = 6;
  e(0, 1) = 1;
  auto pred = bbox_tensor<double>(b);
  EXPECT_EQ(bbox_loss(pred, b, e), 0.0);
  pred.at(0, 0, 1) = 5;
  pred.at(1, 0, 1) = 8;
  EXPECT_DOUBLE_EQ(bbox_loss(pred, b, e), 2.5);
  EXPECT_EQ(bbox_loss(pred, b, EnergyMap(2, 2)), 0.0);
}

TEST(Masking, BackgroundPerturbationsChangeNothing) {
  Rng rng(3);
  DwdConfig cfg;
  const auto anns = test::random_annotations(rng, 32, 32, 6, 7.0);
  const auto t = encode_targets(anns, 32, 32, cfg);
  auto cl = test::random_tensor<float>(rng, {6, 32, 32}, -2, 2);
  auto bb = test::random_tensor<float>(rng, {2, 32, 32}, 0, 10);
  const double lc = class_loss(cl, t.classes, t.energy), lb = bbox_loss(bb, t.boxes, t.energy);
  for (int trial = 0; trial < 20; ++trial) {
    auto cl2 = cl;
    auto bb2 = bb;
    for (int i = 0; i < 32; ++i) {
      for (int j = 0; j < 32; ++j) {
        if (t.energy(i, j) > 0) continue;
        for (int c = 0; c < 6; ++c) cl2.at(c, i, j) = static_cast<float>(test::uniform(rng, -1e3, 1e3));
        for (int c = 0; c < 2; ++c) bb2.at(c, i, j) = static_cast<float>(test::uniform(rng, -1e3, 1e3));
      }
    }
    EXPECT_EQ(class_loss(cl2, t.classes, t.energy), lc);
    EXPECT_EQ(bbox_loss(bb2, t.boxes, t.energy), lb);
  }
}

TEST(Losses, NonNegative) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto logits = test::random_tensor<double>(rng, {5, 6, 6}, -10, 10);
    std::vector<int> target(36);
    for (auto& v : target) v = test::uniform_int(rng, 0, 4);
    EXPECT_GE(softmax_cross_entropy<double>(logits.span(), 5, target, {}), 0.0);
    const auto a = test::random_tensor<double>(rng, {2, 6, 6}), b = test::random_tensor<double>(rng, {2, 6, 6});
    EXPECT_GE(masked_mse<double>(a.span(), b.span(), 2, {}), 0.0);
  }
}

TEST(Losses, AnalyticGradientsMatchFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto logits = test::random_tensor<double>(rng, {4, 3, 5}, -2, 2);
    std::vector<int> target(15);
    for (auto& v : target) v = test::uniform_int(rng, 0, 3);
    std::vector<std::uint8_t> mask(15);
    for (auto& m : mask) m = test::uniform_int(rng, 0, 1);
    std::vector<double> grad(logits.size());
    softmax_cross_entropy<double>(logits.span(), 4, target, mask, grad);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const double keep = logits[k], h = 1e-6;
      logits[k] = keep + h;
      const double up = softmax_cross_entropy<double>(logits.span(), 4, target, mask);
      logits[k] = keep - h;
      const double down = softmax_cross_entropy<double>(logits.span(), 4, target, mask);
      logits[k] = keep;
      EXPECT_NEAR(grad[k], (up - down) / (2 * h), 1e-7);
    }
  }
}

TEST(TotalLoss, Examples) {
  DwdConfig cfg;
  RunningMeans m = update_means({}, 1, 1, 1);
  EXPECT_EQ(total_loss(1, 1, 1, m, cfg), 3.0);
  cfg.w2 = cfg.w3 = 0;
  m = update_means({}, 4, 0, 0);
  EXPECT_EQ(total_loss(2, 7, 9, m, cfg), 0.5);
}

TEST(TotalLoss, GuardsUninitializedAndZeroMeans) {
  DwdConfig cfg;
  EXPECT_THROW(total_loss(1, 1, 1, RunningMeans{}, cfg), NumericError);
  const auto m = update_means({}, 1, 0, 1);
  EXPECT_THROW(total_loss(1, 1, 1, m, cfg), NumericError);
}

TEST(TotalLoss, DoesNotTouchMeans) {
  const auto m = update_means({}, 2, 3, 4);
  const auto copy = m;
  total_loss(1, 1, 1, m, DwdConfig{});
  EXPECT_EQ(m.v_e, copy.v_e);
  EXPECT_EQ(m.v_c, copy.v_c);
  EXPECT_EQ(m.v_b, copy.v_b);
}

TEST(RunningMeansTest, InitializationAndEma) {
  auto m = update_means({}, 2, 3, 4);
  EXPECT_TRUE(m.initialized);
  EXPECT_EQ(m.v_e, 2);
  EXPECT_EQ(m.v_c, 3);
  EXPECT_EQ(m.v_b, 4);

  RunningMeans n;
  n.momentum = 0.9;
  n = update_means(n, 2, 2, 2);
  n = update_means(n, 4, 2, 2);
  EXPECT_NEAR(n.v_e, 2.2, 1e-15);

  RunningMeans c;
  c = update_means(c, 10, 10, 10);
  for (int k = 0; k < 5000; ++k) c = update_means(c, 3, 3, 3);
  EXPECT_NEAR(c.v_e, 3.0, 1e-12);
}

}  // namespace
}  // namespace dwd
