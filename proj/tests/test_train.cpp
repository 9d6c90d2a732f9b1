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
using test::TempDir;

TEST(RmsProp, ZeroGradientDecaysAccumulatorOnly) {
  std::vector<Tensor<double>> params{Tensor<double>({3}, 1.5)};
  OptimizerState<double> st(params, 0.001, 0.995);
  st.accumulators[0].fill(2.0);
  rmsprop_step(params, {Tensor<double>({3}, 0.0)}, st);
  for (double v : params[0].storage()) EXPECT_EQ(v, 1.5);
  for (double a : st.accumulators[0].storage()) EXPECT_DOUBLE_EQ(a, 0.995 * 2.0);
}

TEST(RmsProp, FirstStepArithmetic) {
  std::vector<Tensor<double>> params{Tensor<double>({1}, 0.0)};
  OptimizerState<double> st(params, 0.001, 0.995);
  rmsprop_step(params, {Tensor<double>({1}, 1.0)}, st);
  EXPECT_NEAR(st.accumulators[0][0], 0.005, 1e-15);
  EXPECT_NEAR(params[0][0], -0.001 / std::sqrt(0.005 + 1e-8), 1e-15);
}

TEST(RmsProp, ConstantGradientStepApproachesLearningRate) {
  for (double g : {3.0, -0.25}) {
    std::vector<Tensor<double>> params{Tensor<double>({1}, 0.0)};
    OptimizerState<double> st(params, 0.001, 0.995);
    double before = 0.0;
    for (int k = 0; k < 5000; ++k) {
      before = params[0][0];
      rmsprop_step(params, {Tensor<double>({1}, g)}, st);
    }
    EXPECT_NEAR(params[0][0] - before, -0.001 * (g > 0 ? 1 : -1), 1e-6);
  }
}

TEST(RmsProp, MismatchIsValidationError) {
  std::vector<Tensor<double>> params{Tensor<double>({2})};
  OptimizerState<double> st(params, 0.001, 0.995);
  EXPECT_THROW(rmsprop_step(params, {Tensor<double>({3})}, st), ValidationError);
  EXPECT_THROW(rmsprop_step(params, {}, st), ValidationError);
}

TrainingPage small_page(std::uint64_t seed, int size = 48) {
  GenConfig gen;
  gen.rows = gen.cols = size;
  gen.symbols_min = 3;
  gen.symbols_max = 5;
  std::mt19937_64 rng(seed);
  const auto p = generate_page(default_alphabet(), gen, rng);
  return prepare_training_page(p.image, p.annotations, DwdConfig{});
}

TEST(Crop, FullSizeCropIsIdentity) {
  const auto page = small_page(1);
  Rng rng(0);
  const auto c = random_crop(page, 48, rng);
  EXPECT_EQ(c.offset_i, 0);
  EXPECT_EQ(c.offset_j, 0);
  EXPECT_EQ(c.image.pixels, page.image.pixels);
  EXPECT_EQ(c.targets.energy, page.targets.energy);
  EXPECT_EQ(c.targets.quantized, page.targets.quantized);
  EXPECT_EQ(c.targets.classes, page.targets.classes);
  EXPECT_EQ(c.targets.boxes, page.targets.boxes);
}

TEST(Crop, SeededOffsetsAreReproducibleAndAligned) {
  const auto page = small_page(2);
  Rng a(5), b(5);
  for (int k = 0; k < 20; ++k) {
    const auto ca = random_crop(page, 20, a), cb = random_crop(page, 20, b);
    EXPECT_EQ(ca.offset_i, cb.offset_i);
    EXPECT_EQ(ca.offset_j, cb.offset_j);
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        ASSERT_EQ(ca.image.pixels(i, j), page.image.pixels(i + ca.offset_i, j + ca.offset_j));
        ASSERT_EQ(ca.targets.classes(i, j), page.targets.classes(i + ca.offset_i, j + ca.offset_j));
        const bool fg = ca.targets.energy(i, j) > 0;
        ASSERT_EQ(fg, ca.targets.classes(i, j) != 0);
        ASSERT_EQ(fg, ca.targets.boxes(i, j, 0) != 0 || ca.targets.boxes(i, j, 1) != 0);
      }
    }
  }
}

TEST(Crop, OffsetsCoverAllValidPositions) {
  const auto page = small_page(3, 24);
  Rng rng(1);
  std::set<std::pair<int, int>> seen;
  for (int k = 0; k < 2000; ++k) {
    const auto c = random_crop(page, 22, rng);
    seen.insert({c.offset_i, c.offset_j});
  }
  EXPECT_EQ(seen.size(), 9u);
}

TEST(Crop, SmallPageIsPaddedWithBackground) {
  const auto page = small_page(4, 24);
  Rng rng(1);
  const auto c = random_crop(page, 30, rng);
  EXPECT_EQ(c.image.pixels(29, 29), 1.0);
  EXPECT_EQ(c.targets.quantized.level(29, 29), 0);
  EXPECT_EQ(c.targets.classes(29, 29), 0);
}

TEST(Schedule, ParseAndValidate) {
  const auto phases = parse_phases("e:10,c:5,b:0,e-again:3,total:7");
  ASSERT_EQ(phases.size(), 5u);
  EXPECT_EQ(phases[3].loss, LossKind::kEnergy);
  EXPECT_EQ(format_phases(phases), "e:10,c:5,b:0,e-again:3,total:7");
  EXPECT_THROW(parse_phases("x:3,total:1"), ValidationError);
  EXPECT_THROW(parse_phases("e:3x,total:1"), ValidationError);
  TrainSchedule s{parse_phases("e:3,c:2"), 32, 1};
  EXPECT_THROW(s.validate(), ValidationError);
  s.phases.clear();
  EXPECT_THROW(s.validate(), ValidationError);
}

struct TrainFixture {
  DwdConfig cfg;
  NetworkSpec spec = network_preset("tiny", DwdConfig{});
  std::vector<TrainingPage> pages{small_page(11), small_page(12)};
  TrainSchedule schedule(const std::string& phases, std::uint64_t seed = 3) const {
    return TrainSchedule{parse_phases(phases), 32, seed};
  }
};

TEST(Train, SameSeedSameLogAndParameters) {
  TrainFixture f;
  const auto a = train(f.pages, f.spec, f.schedule("e:4,c:3,b:3,e-again:2,total:4"), f.cfg);
  const auto b = train(f.pages, f.spec, f.schedule("e:4,c:3,b:3,e-again:2,total:4"), f.cfg);
  ASSERT_EQ(a.log.size(), 16u);
  for (std::size_t k = 0; k < a.log.size(); ++k) EXPECT_EQ(format_loss_row(a.log[k]), format_loss_row(b.log[k]));
  EXPECT_EQ(a.state.net.parameters(), b.state.net.parameters());
  const auto c = train(f.pages, f.spec, f.schedule("e:4,c:3,b:3,e-again:2,total:4", 4), f.cfg);
  EXPECT_NE(a.state.net.parameters(), c.state.net.parameters());
}

TEST(Train, ZeroIterationPhaseIsSkipped) {
  TrainFixture f;
  const auto r = train(f.pages, f.spec, f.schedule("e:3,c:0,b:2,total:2"), f.cfg);
  ASSERT_EQ(r.log.size(), 7u);
  for (std::size_t k = 0; k < r.log.size(); ++k) EXPECT_EQ(r.log[k].iteration, static_cast<long>(k + 1));
}

TEST(Train, CheckpointsPerPhaseAndResumeIsExact) {
  TrainFixture f;
  TempDir dir;
  TrainOptions opts;
  opts.checkpoint_dir = dir.path();
  const auto sched = f.schedule("e:3,c:3,b:2,e-again:2,total:3");
  const auto full = train(f.pages, f.spec, sched, f.cfg, opts);
  for (const char* name : {"init", "phase1_e", "phase2_c", "phase3_b", "phase4_e-again", "phase5_total", "latest"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string(name) + ".dwdc"))) << name;
  }
  auto mid = load_checkpoint(dir / "phase2_c.dwdc", f.spec);
  EXPECT_EQ(mid.iteration, 6);
  EXPECT_EQ(mid.phase_index, 2);
  const auto resumed = train(f.pages, f.spec, sched, f.cfg, {}, std::move(mid));
  ASSERT_EQ(resumed.log.size(), 7u);
  EXPECT_EQ(resumed.log.front().iteration, 7);
  for (std::size_t k = 0; k < resumed.log.size(); ++k) {
    EXPECT_EQ(format_loss_row(resumed.log[k]), format_loss_row(full.log[6 + k]));
  }
  EXPECT_EQ(resumed.state.net.parameters(), full.state.net.parameters());
}

TEST(Train, CheckpointRejectsOtherArchitecture) {
  TrainFixture f;
  TempDir dir;
  const auto s = initial_state(f.spec, f.schedule("total:1"), f.cfg);
  save_checkpoint(dir / "c.dwdc", s);
  const auto back = load_checkpoint(dir / "c.dwdc", f.spec);
  EXPECT_EQ(back.net.parameters(), s.net.parameters());
  EXPECT_EQ(back.rng_state, s.rng_state);
  EXPECT_THROW(load_checkpoint(dir / "c.dwdc", network_preset("micro", f.cfg)), FormatError);
  detail::write_file_atomic(dir / "bad.dwdc", {'D', 'W', 'D'});
  EXPECT_THROW(load_checkpoint(dir / "bad.dwdc", f.spec), FormatError);
}

TEST(Train, EmptyDatasetOrHeadMismatchIsValidationError) {
  TrainFixture f;
  EXPECT_THROW(train({}, f.spec, f.schedule("total:1"), f.cfg), ValidationError);
  auto cfg = f.cfg;
  cfg.e_max = 5;
  cfg.cut_level = 3;
  EXPECT_THROW(train(f.pages, f.spec, f.schedule("total:1"), cfg), ValidationError);
}

TEST(Train, EnergyLossDropsOnOnePage) {
  const DwdConfig cfg;
  const std::vector<TrainingPage> pages{small_page(21, 64)};
  const auto r = train(pages, network_preset("micro", cfg), TrainSchedule{parse_phases("e:200,total:0"), 64, 1}, cfg);
  ASSERT_EQ(r.log.size(), 200u);
  EXPECT_LT(r.log.back().loss_e, r.log.front().loss_e);
}

TEST(Train, JointWeightsIgnoreUnseenMeans) {
  DwdConfig cfg;
  EXPECT_EQ(detail::joint_weights(RunningMeans{}, cfg), (std::array<double, 3>{0, 0, 0}));
  const auto m = update_means({}, 2, 4, 0);
  EXPECT_EQ(detail::joint_weights(m, cfg), (std::array<double, 3>{0.5, 0.25, 0}));
}

TEST(LossLog, HeaderAndRowFormat) {
  EXPECT_EQ(loss_log_header(), "iter,loss_e,loss_c,loss_b,loss_tot\n");
  EXPECT_EQ(format_loss_row({3, 0.5, 1.25, 2, 3}), "3,0.5,1.25,2,3\n");
}

}  // namespace
}  // namespace dwd
