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

// Training: aligned random crops, the phased schedule (individual losses,
// energy retrain, joint loss), RMSProp updates, loss log and checkpoints.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dwd/autodiff.hpp"
#include "dwd/encoder.hpp"
#include "dwd/error.hpp"
#include "dwd/log.hpp"
#include "dwd/losses.hpp"
#include "dwd/map_io.hpp"
#include "dwd/network.hpp"
#include "dwd/optimizer.hpp"
#include "dwd/scoregen.hpp"
#include "dwd/types.hpp"

namespace dwd {

enum class LossKind { kEnergy, kClass, kBBox, kTotal };

struct Phase {
  std::string name;  // e, c, b, e-again, total
  LossKind loss = LossKind::kTotal;
  int iterations = 0;
  friend bool operator==(const Phase&, const Phase&) = default;
};

struct TrainSchedule {
  std::vector<Phase> phases;
  int crop_size = 128;
  std::uint64_t seed = 1;

  void validate() const {
    if (phases.empty()) throw ValidationError("schedule has no phases");
    if (phases.back().loss != LossKind::kTotal) throw ValidationError("final phase must be 'total'");
    for (const auto& p : phases) {
      if (p.iterations < 0) throw ValidationError("phase iteration counts must be >= 0");
    }
    if (crop_size < 1) throw ValidationError("crop_size must be >= 1");
  }

  long total_iterations() const {
    long n = 0;
    for (const auto& p : phases) n += p.iterations;
    return n;
  }
};

inline LossKind loss_kind(const std::string& name) {
  if (name == "e" || name == "e-again") return LossKind::kEnergy;
  if (name == "c") return LossKind::kClass;
  if (name == "b") return LossKind::kBBox;
  if (name == "total") return LossKind::kTotal;
  throw ValidationError("unknown schedule phase '" + name + "' (expected e, c, b, e-again, total)");
}

/// "e:1000,c:1000,b:1000,e-again:1000,total:2000"
inline std::vector<Phase> parse_phases(const std::string& text) {
  std::vector<Phase> phases;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("schedule entry '" + item + "' lacks ':'");
    Phase p;
    p.name = item.substr(0, colon);
    p.loss = loss_kind(p.name);
    try {
      std::size_t used = 0;
      p.iterations = std::stoi(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("schedule entry '" + item + "' has a bad iteration count");
    }
    phases.push_back(p);
  }
  return phases;
}

inline std::string format_phases(const std::vector<Phase>& phases) {
  std::string s;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    s += (k ? "," : "") + phases[k].name + ":" + std::to_string(phases[k].iterations);
  }
  return s;
}

/// Page at the training interline with its encoded targets.
struct TrainingPage {
  PageImage image;
  TargetMaps targets;
};

inline TrainingPage prepare_training_page(const PageImage& page, const std::vector<Annotation>& annotations,
                                          const DwdConfig& cfg) {
  auto norm = interline_normalize(page, annotations, cfg.target_interline);
  TrainingPage out;
  out.targets = encode_targets(norm.annotations, norm.image.rows(), norm.image.cols(), cfg);
  out.image = std::move(norm.image);
  return out;
}

/// Image and targets cut at one shared offset.
struct Crop {
  int offset_i = 0;
  int offset_j = 0;
  PageImage image;
  TargetMaps targets;
};

/// Cuts a size x size window at (offset_i, offset_j). Parts outside the page
/// are background: blank paper, zero energy, class 0, empty box.
inline Crop crop_at(const TrainingPage& page, int size, int offset_i, int offset_j) {
  Crop c;
  c.offset_i = offset_i;
  c.offset_j = offset_j;
  const int bins = page.targets.quantized.bins();
  c.image = PageImage(size, size, page.image.interline, 1.0);
  c.targets.energy = EnergyMap(size, size);
  c.targets.quantized = QuantizedEnergyMap(size, size, bins);
  c.targets.classes = ClassMap(size, size);
  c.targets.boxes = BBoxMap(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const int si = i + offset_i, sj = j + offset_j;
      if (!page.image.pixels.contains(si, sj)) {
        c.targets.quantized(i, j, 0) = 1;
        continue;
      }
      c.image.pixels(i, j) = page.image.pixels(si, sj);
      c.targets.energy(i, j) = page.targets.energy(si, sj);
      for (int k = 0; k < bins; ++k) c.targets.quantized(i, j, k) = page.targets.quantized(si, sj, k);
      c.targets.classes(i, j) = page.targets.classes(si, sj);
      c.targets.boxes(i, j, 0) = page.targets.boxes(si, sj, 0);
      c.targets.boxes(i, j, 1) = page.targets.boxes(si, sj, 1);
    }
  }
  return c;
}

/// Uniform offset over all positions where the window fits; pages smaller
/// than the window are padded on the bottom and right.
template <typename Rng>
Crop random_crop(const TrainingPage& page, int size, Rng& rng) {
  const int max_i = std::max(0, page.image.rows() - size);
  const int max_j = std::max(0, page.image.cols() - size);
  const int oi = std::uniform_int_distribution<int>(0, max_i)(rng);
  const int oj = std::uniform_int_distribution<int>(0, max_j)(rng);
  return crop_at(page, size, oi, oj);
}

/// One row of logs/train.csv.
struct LossLogRow {
  long iteration = 0;
  double loss_e = 0.0;
  double loss_c = 0.0;
  double loss_b = 0.0;
  double loss_tot = 0.0;
};

inline std::string loss_log_header() { return "iter,loss_e,loss_c,loss_b,loss_tot\n"; }

inline std::string format_loss_row(const LossLogRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%.9g\n", r.iteration, r.loss_e, r.loss_c,
                r.loss_b, r.loss_tot);
  return buf;
}

/// Everything needed to resume training bit-exactly.
struct TrainState {
  Network<float> net;
  OptimizerState<float> optimizer;
  RunningMeans means;
  long iteration = 0;  // completed iterations, all phases
  int phase_index = 0;
  int phase_iteration = 0;
  std::string rng_state;
};

inline TrainState initial_state(const NetworkSpec& spec, const TrainSchedule& schedule,
                                const DwdConfig& cfg) {
  TrainState s{Network<float>(spec), {}, {}, 0, 0, 0, {}};
  s.net.init_he(derive_seed(schedule.seed, 0xC0FFEE));
  s.optimizer = OptimizerState<float>(s.net.parameters(), cfg.learning_rate, cfg.decay_rate);
  s.means.momentum = cfg.mean_momentum;
  std::mt19937_64 rng(schedule.seed);
  std::ostringstream os;
  os << rng;
  s.rng_state = os.str();
  return s;
}

// Checkpoint file: "DWDC", u32 version, u64 spec hash, then the resume
// state and the parameter and accumulator blobs.
namespace detail {

inline void put_string(std::vector<char>& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

inline void put_tensors(std::vector<char>& out, const std::vector<Tensor<float>>& ts) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (int d : t.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : t.storage()) put_le<float>(out, v);
  }
}

class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = get_le<U>(bytes_.data() + pos_);
    pos_ += sizeof(U);
    return v;
  }
  std::string string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<Tensor<float>> tensors() {
    const auto n = get<std::uint32_t>();
    std::vector<Tensor<float>> out;
    for (std::uint32_t k = 0; k < n; ++k) {
      const auto rank = get<std::uint8_t>();
      std::vector<int> shape;
      for (int d = 0; d < rank; ++d) shape.push_back(static_cast<int>(get<std::uint32_t>()));
      Tensor<float> t(shape);
      for (auto& v : t.storage()) v = get<float>();
      out.push_back(std::move(t));
    }
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError(source_ + ": truncated checkpoint");
  }
  const std::vector<char>& bytes_;
  std::string source_;
  std::size_t pos_ = 4;
};

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const TrainState& s) {
  std::vector<char> out = {'D', 'W', 'D', 'C'};
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint64_t>(out, s.net.spec().hash());
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.iteration));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.phase_index));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.phase_iteration));
  detail::put_le<double>(out, s.means.v_e);
  detail::put_le<double>(out, s.means.v_c);
  detail::put_le<double>(out, s.means.v_b);
  detail::put_le<double>(out, s.means.momentum);
  detail::put_le<std::uint8_t>(out, s.means.initialized ? 1 : 0);
  detail::put_le<double>(out, s.optimizer.learning_rate);
  detail::put_le<double>(out, s.optimizer.decay_rate);
  detail::put_string(out, s.rng_state);
  detail::put_tensors(out, s.net.parameters());
  detail::put_tensors(out, s.optimizer.accumulators);
  detail::write_file_atomic(path, out);
}

/// Loads a checkpoint written for `spec`; a different architecture is a
/// format error.
inline TrainState load_checkpoint(const std::filesystem::path& path, const NetworkSpec& spec) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "DWDC", 4) != 0) {
    throw FormatError(path.string() + ": not a checkpoint (bad magic)");
  }
  detail::Reader in(bytes, path.string());
  if (in.get<std::uint32_t>() != 1) throw FormatError(path.string() + ": unsupported checkpoint version");
  if (in.get<std::uint64_t>() != spec.hash()) {
    throw FormatError(path.string() + ": checkpoint was written for a different network");
  }
  TrainState s{Network<float>(spec), {}, {}, 0, 0, 0, {}};
  s.iteration = static_cast<long>(in.get<std::uint64_t>());
  s.phase_index = static_cast<int>(in.get<std::uint32_t>());
  s.phase_iteration = static_cast<int>(in.get<std::uint32_t>());
  s.means.v_e = in.get<double>();
  s.means.v_c = in.get<double>();
  s.means.v_b = in.get<double>();
  s.means.momentum = in.get<double>();
  s.means.initialized = in.get<std::uint8_t>() != 0;
  s.optimizer.learning_rate = in.get<double>();
  s.optimizer.decay_rate = in.get<double>();
  s.rng_state = in.string();
  auto params = in.tensors();
  auto accs = in.tensors();
  if (!in.done()) throw FormatError(path.string() + ": trailing bytes");
  auto& dst = s.net.parameters();
  if (params.size() != dst.size() || accs.size() != dst.size()) {
    throw FormatError(path.string() + ": parameter count mismatch");
  }
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (!params[k].same_shape(dst[k]) || !accs[k].same_shape(dst[k])) {
      throw FormatError(path.string() + ": parameter shape mismatch");
    }
  }
  dst = std::move(params);
  s.optimizer.accumulators = std::move(accs);
  return s;
}

struct TrainOptions {
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints written
  int checkpoint_every = 0;              // extra mid-phase checkpoints; 0 = phase ends only
  std::function<void(const LossLogRow&)> on_log;
};

struct TrainResult {
  TrainState state;
  std::vector<LossLogRow> log;
  std::filesystem::path last_checkpoint;
};

/// Loss went non-finite; carries the last checkpoint written.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::filesystem::path checkpoint)
      : NumericError(what), checkpoint_(std::move(checkpoint)) {}
  const std::filesystem::path& checkpoint() const noexcept { return checkpoint_; }

 private:
  std::filesystem::path checkpoint_;
};

namespace detail {

// Joint-loss weights w_k / v_k; a head whose mean has not been observed yet
// contributes nothing.
inline std::array<double, 3> joint_weights(const RunningMeans& m, const DwdConfig& cfg) {
  auto ratio = [&](double w, double v) { return m.initialized && v > 0 ? w / v : 0.0; };
  return {ratio(cfg.w1, m.v_e), ratio(cfg.w2, m.v_c), ratio(cfg.w3, m.v_b)};
}

}  // namespace detail

/// Runs `schedule` from `resume` (or a fresh He-initialized network) with
/// single-page batches: one random page and one random crop per iteration.
inline TrainResult train(const std::vector<TrainingPage>& dataset, const NetworkSpec& spec,
                         const TrainSchedule& schedule, const DwdConfig& cfg,
                         const TrainOptions& options = {}, std::optional<TrainState> resume = {}) {
  if (dataset.empty()) throw ValidationError("training dataset is empty");
  schedule.validate();
  cfg.validate();
  spec.validate();
  if (spec.energy_bins != cfg.energy_bins() || spec.class_channels != cfg.class_channels()) {
    throw ValidationError("network head depths do not match the configuration");
  }

  TrainResult result{resume ? std::move(*resume) : initial_state(spec, schedule, cfg), {}, {}};
  auto& st = result.state;
  std::mt19937_64 rng;
  {
    std::istringstream is(st.rng_state);
    is >> rng;
    if (!is) throw FormatError("bad RNG state in training state");
  }

  auto checkpoint = [&](const std::string& name) {
    if (options.checkpoint_dir.empty()) return;
    std::ostringstream os;
    os << rng;
    st.rng_state = os.str();
    std::filesystem::create_directories(options.checkpoint_dir);
    const auto path = options.checkpoint_dir / (name + ".dwdc");
    save_checkpoint(path, st);
    save_checkpoint(options.checkpoint_dir / "latest.dwdc", st);
    result.last_checkpoint = path;
  };
  if (st.iteration == 0) checkpoint("init");

  for (; st.phase_index < static_cast<int>(schedule.phases.size()); ++st.phase_index, st.phase_iteration = 0) {
    const auto& phase = schedule.phases[st.phase_index];
    for (; st.phase_iteration < phase.iterations; ++st.phase_iteration) {
      const auto& page = dataset[std::uniform_int_distribution<std::size_t>(0, dataset.size() - 1)(rng)];
      const Crop crop = random_crop(page, schedule.crop_size, rng);
      const auto mask = foreground_mask(crop.targets.energy);
      const bool has_fg = std::any_of(mask.begin(), mask.end(), [](auto m) { return m != 0; });

      Tape<float> tape;
      const auto g = st.net.forward(tape, image_tensor<float>(crop.image));
      const Var le = tape.softmax_cross_entropy(g.energy, energy_targets(crop.targets.quantized));
      const Var lc = tape.softmax_cross_entropy(g.classes, class_targets(crop.targets.classes), mask);
      const Var lb = tape.masked_mse(g.boxes, bbox_tensor<float>(crop.targets.boxes), mask);
      const double ve = tape.value(le)[0], vc = tape.value(lc)[0], vb = tape.value(lb)[0];
      if (!std::isfinite(ve) || !std::isfinite(vc) || !std::isfinite(vb)) {
        throw DivergenceError("non-finite loss at iteration " + std::to_string(st.iteration + 1) +
                                  "; last checkpoint: " + result.last_checkpoint.string(),
                              result.last_checkpoint);
      }

      if (!st.means.initialized && has_fg) st.means = update_means(st.means, ve, vc, vb);
      const auto w = detail::joint_weights(st.means, cfg);
      const double tot = w[0] * ve + w[1] * vc + w[2] * vb;

      Var objective;
      switch (phase.loss) {
        case LossKind::kEnergy: objective = le; break;
        case LossKind::kClass: objective = lc; break;
        case LossKind::kBBox: objective = lb; break;
        case LossKind::kTotal:
          objective = tape.weighted_sum({le, lc, lb}, {static_cast<float>(w[0]), static_cast<float>(w[1]),
                                                       static_cast<float>(w[2])});
          break;
      }
      tape.backward(objective);
      std::vector<Tensor<float>> grads;
      grads.reserve(g.params.size());
      for (Var p : g.params) grads.push_back(tape.grad(p));
      rmsprop_step(st.net.parameters(), grads, st.optimizer);

      if (st.means.initialized) {
        st.means = has_fg ? update_means(st.means, ve, vc, vb)
                          : update_means(st.means, ve, st.means.v_c, st.means.v_b);
      }
      ++st.iteration;
      LossLogRow row{st.iteration, ve, vc, vb, tot};
      result.log.push_back(row);
      if (options.on_log) options.on_log(row);
      if (options.checkpoint_every > 0 && st.iteration % options.checkpoint_every == 0 &&
          st.phase_iteration + 1 < phase.iterations) {
        ++st.phase_iteration;
        checkpoint("iter_" + std::to_string(st.iteration));
        --st.phase_iteration;
      }
    }
    if (phase.iterations > 0) {
      st.phase_iteration = phase.iterations;
      ++st.phase_index;
      st.phase_iteration = 0;
      checkpoint("phase" + std::to_string(st.phase_index) + "_" + phase.name);
      --st.phase_index;
      log::info("finished phase " + phase.name + " at iteration " + std::to_string(st.iteration));
    }
  }
  std::ostringstream os;
  os << rng;
  st.rng_state = os.str();
  return result;
}

}  // namespace dwd
