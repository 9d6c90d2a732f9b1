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

// dwd: command-line front end for dataset generation, target encoding,
// network training and inference, decoding, evaluation and rendering.
//
// Exit codes: 0 success, 2 I/O or usage, 3 validation, 4 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dwd/dwd.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config_file;
  dwd::ConfigValues overrides;
  bool force = false;
};

void add_common(CLI::App* sub, CommonOptions& common) {
  sub->add_option("--config", common.config_file, "key=value config file");
  sub->add_flag("--force", common.force, "overwrite a non-empty output directory");
  for (const auto& key : dwd::config_keys()) {
    auto* values = &common.overrides;
    const std::string name = key.key;
    sub->add_option_function<std::string>(
        "--" + name, [values, name](const std::string& v) { (*values)[name] = v; }, key.help);
  }
}

dwd::RunConfig resolve(const CommonOptions& common) {
  dwd::ConfigValues values;
  if (!common.config_file.empty()) values = dwd::load_config_file(common.config_file);
  for (const auto& [k, v] : common.overrides) values[k] = v;
  return dwd::resolve_config(values);
}

// Creates `dir`; a non-empty existing directory needs --force.
void prepare_output_dir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_empty(dir, ec) && !force) {
    throw dwd::UsageError("output directory " + dir.string() + " is not empty (use --force)");
  }
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw dwd::IoError(dir.string(), "cannot create directory");
}

void write_config_echo(const fs::path& dir, const dwd::RunConfig& cfg) {
  dwd::write_text_file(dir / "config.resolved", dwd::echo_config(cfg));
}

dwd::PageHeader header_of(const dwd::AnnotationFile& f, const fs::path& source) {
  if (!f.page) throw dwd::ValidationError(source.string() + ": missing 'page H W interline' header");
  return *f.page;
}

dwd::PageImage load_page(const dwd::DatasetPaths& data, const std::string& id, dwd::AnnotationFile& ann) {
  ann = dwd::load_annotations(data.annotations(id));
  const auto header = header_of(ann, data.annotations(id));
  auto page = dwd::load_page_png(data.image(id), header.interline);
  if (page.rows() != header.rows || page.cols() != header.cols) {
    throw dwd::ValidationError(data.image(id).string() + ": image size differs from annotation header");
  }
  return page;
}

int cmd_generate(const CommonOptions& common, const fs::path& out) {
  const auto cfg = resolve(common);
  prepare_output_dir(out, common.force);
  if (common.force) {
    fs::remove_all(out / "pages");
    fs::remove(out / "manifest.txt");
  }
  fs::create_directories(out / "pages");
  const dwd::DatasetPaths paths{out};
  const auto alphabet = dwd::default_alphabet();
  std::vector<std::string> ids;
  for (int k = 0; k < cfg.pages; ++k) ids.push_back(dwd::page_id(k));
  dwd::parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
    std::mt19937_64 rng(dwd::derive_seed(cfg.seed, k));
    const auto page = dwd::generate_page(alphabet, cfg.gen, rng);
    dwd::save_page_png(paths.image(ids[k]), page.image);
    dwd::save_annotations(paths.annotations(ids[k]),
                          dwd::PageHeader{page.image.rows(), page.image.cols(), page.image.interline},
                          page.annotations);
  });
  dwd::write_manifest(out, ids);
  write_config_echo(out, cfg);
  std::cout << "generated " << ids.size() << " page(s) in " << out.string() << "\n";
  return kExitOk;
}

int cmd_encode(const CommonOptions& common, const fs::path& data_dir, const fs::path& out) {
  const auto cfg = resolve(common);
  const dwd::DatasetPaths data{data_dir};
  const auto ids = dwd::read_manifest(data_dir);
  prepare_output_dir(out, common.force);
  const dwd::MapPaths maps{out};
  dwd::parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
    dwd::AnnotationFile ann;
    const auto page = load_page(data, ids[k], ann);
    const auto norm = dwd::interline_normalize(page, ann.annotations, cfg.dwd.target_interline);
    const auto t = dwd::encode_targets(norm.annotations, norm.image.rows(), norm.image.cols(), cfg.dwd);
    dwd::save_map(t.energy, maps.energy(ids[k]));
    dwd::save_map(t.quantized, maps.quantized(ids[k]));
    dwd::save_map(t.classes, maps.classes(ids[k]));
    dwd::save_map(t.boxes, maps.boxes(ids[k]));
    dwd::write_text_file(maps.meta(ids[k]), dwd::format_page_header(*ann.page));
  });
  dwd::write_manifest(out, ids);
  write_config_echo(out, cfg);
  std::cout << "encoded " << ids.size() << " page(s) into " << out.string() << "\n";
  return kExitOk;
}

int cmd_predict(const CommonOptions& common, const fs::path& data_dir, const fs::path& checkpoint,
                const fs::path& out) {
  const auto cfg = resolve(common);
  const auto spec = dwd::network_preset(cfg.network, cfg.dwd);
  const auto state = dwd::load_checkpoint(checkpoint, spec);
  const dwd::DatasetPaths data{data_dir};
  const auto ids = dwd::read_manifest(data_dir);
  prepare_output_dir(out, common.force);
  const dwd::MapPaths maps{out};
  dwd::parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
    dwd::AnnotationFile ann;
    const auto page = load_page(data, ids[k], ann);
    const auto norm = dwd::interline_normalize(page, {}, cfg.dwd.target_interline);
    const auto pred = dwd::to_maps(state.net.predict(norm.image));
    dwd::save_map(pred.energy, maps.energy(ids[k]));
    dwd::save_map(pred.classes, maps.classes(ids[k]));
    dwd::save_map(pred.boxes, maps.boxes(ids[k]));
    dwd::write_text_file(maps.meta(ids[k]), dwd::format_page_header(*ann.page));
  });
  dwd::write_manifest(out, ids);
  write_config_echo(out, cfg);
  std::cout << "predicted maps for " << ids.size() << " page(s) into " << out.string() << "\n";
  return kExitOk;
}

int cmd_decode(const CommonOptions& common, const fs::path& map_dir, const fs::path& out) {
  const auto cfg = resolve(common);
  const auto ids = dwd::read_manifest(map_dir);
  prepare_output_dir(out, common.force);
  const dwd::MapPaths maps{map_dir};
  std::mutex mu;
  std::size_t total = 0;
  dwd::parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
    const auto energy = dwd::load_map<dwd::EnergyMap>(maps.energy(ids[k]));
    const auto classes = dwd::load_map<dwd::ClassMap>(maps.classes(ids[k]));
    const auto boxes = dwd::load_map<dwd::BBoxMap>(maps.boxes(ids[k]));
    if (!energy.same_grid(classes) || !energy.same_grid(boxes)) {
      throw dwd::ValidationError("page " + ids[k] + ": map dimensions differ");
    }
    auto dets = dwd::decode(energy, classes, boxes, cfg.dwd);
    std::optional<dwd::PageHeader> header;
    if (fs::exists(maps.meta(ids[k]))) {
      header = dwd::load_annotations(maps.meta(ids[k])).page;
      if (header) dets = dwd::rescale_detections(std::move(dets), header->interline / cfg.dwd.target_interline);
    }
    dwd::save_detections(out / (ids[k] + ".txt"), header, dets);
    std::lock_guard<std::mutex> lock(mu);
    total += dets.size();
  });
  dwd::write_manifest(out, ids);
  write_config_echo(out, cfg);
  std::cout << "decoded " << total << " detection(s) from " << ids.size() << " page(s)\n";
  return kExitOk;
}

std::vector<dwd::TrainingPage> load_training_pages(const fs::path& data_dir, const dwd::RunConfig& cfg) {
  const dwd::DatasetPaths data{data_dir};
  const auto ids = dwd::read_manifest(data_dir);
  std::vector<dwd::TrainingPage> pages(ids.size());
  dwd::parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
    dwd::AnnotationFile ann;
    const auto page = load_page(data, ids[k], ann);
    pages[k] = dwd::prepare_training_page(page, ann.annotations, cfg.dwd);
  });
  return pages;
}

int cmd_train(const CommonOptions& common, const fs::path& data_dir, const fs::path& run,
              const std::string& resume) {
  const auto cfg = resolve(common);
  const auto spec = dwd::network_preset(cfg.network, cfg.dwd);
  const auto pages = load_training_pages(data_dir, cfg);
  if (pages.empty()) throw dwd::ValidationError("dataset " + data_dir.string() + " has no pages");

  std::optional<dwd::TrainState> state;
  if (!resume.empty()) {
    state = dwd::load_checkpoint(resume, spec);
    fs::create_directories(run);
  } else {
    prepare_output_dir(run, common.force);
  }
  fs::create_directories(run / "checkpoints");
  fs::create_directories(run / "logs");
  fs::create_directories(run / "reports");
  write_config_echo(run, cfg);

  // The log keeps rows up to the resumed iteration and continues from there.
  const auto log_path = run / "logs" / "train.csv";
  std::string kept = dwd::loss_log_header();
  if (state) {
    std::ifstream in(log_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stol(line.substr(0, line.find(','))) > state->iteration) break;
      kept += line + "\n";
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw dwd::IoError(log_path.string(), "cannot open for writing");
  log << kept;

  dwd::TrainOptions options;
  options.checkpoint_dir = run / "checkpoints";
  options.checkpoint_every = cfg.checkpoint_every;
  options.on_log = [&](const dwd::LossLogRow& row) { log << dwd::format_loss_row(row); };
  try {
    const auto result = dwd::train(pages, spec, cfg.schedule, cfg.dwd, options, std::move(state));
    log.flush();
    std::cout << "trained " << result.state.iteration << " iteration(s); checkpoint "
              << result.last_checkpoint.string() << "\n";
  } catch (const dwd::DivergenceError& e) {
    log.flush();
    std::cerr << "dwd train: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_eval(const CommonOptions& common, const fs::path& det_dir, const fs::path& truth_dir,
             const fs::path& out, int top) {
  const auto cfg = resolve(common);
  const auto det_ids = dwd::read_manifest(det_dir);
  const auto truth_ids = dwd::read_manifest(truth_dir);
  const std::set<std::string> det_set(det_ids.begin(), det_ids.end());
  const std::set<std::string> truth_set(truth_ids.begin(), truth_ids.end());
  if (det_set != truth_set) {
    std::string offenders;
    for (const auto& id : det_set) {
      if (!truth_set.count(id)) offenders += " " + id + "(no ground truth)";
    }
    for (const auto& id : truth_set) {
      if (!det_set.count(id)) offenders += " " + id + "(no detections)";
    }
    throw dwd::ValidationError("page ids differ:" + offenders);
  }
  const dwd::DatasetPaths truth{truth_dir};
  std::vector<dwd::EvalPage> pages(truth_ids.size());
  dwd::parallel_for(truth_ids.size(), cfg.jobs, [&](std::size_t k) {
    pages[k].id = truth_ids[k];
    pages[k].truth = dwd::load_annotations(truth.annotations(truth_ids[k])).annotations;
    pages[k].detections = dwd::load_detections(det_dir / (truth_ids[k] + ".txt")).detections;
  });
  const auto alphabet = dwd::default_alphabet();
  const auto report = dwd::evaluate(pages, [&](int c) { return alphabet.name_of(c); });
  fs::create_directories(out);
  dwd::write_text_file(out / "report.csv", dwd::report_csv(report));
  const auto table = dwd::report_table(report, static_cast<std::size_t>(top));
  dwd::write_text_file(out / "report.txt", table);
  std::cout << table;
  return kExitOk;
}

int cmd_render(const fs::path& page_path, const std::string& det_path, const std::string& class_map_path,
               const fs::path& out) {
  if (det_path.empty() == class_map_path.empty()) {
    throw dwd::UsageError("render needs exactly one of --detections or --class-map");
  }
  const auto page = dwd::load_page_png(page_path, 10.0);
  auto img = dwd::to_rgb(page);
  if (!det_path.empty()) {
    dwd::draw_detections(img, dwd::load_detections(det_path).detections);
  } else {
    const auto classes = dwd::load_map<dwd::ClassMap>(class_map_path);
    if (!classes.same_grid(page.rows(), page.cols())) {
      throw dwd::ValidationError("class map size differs from the page");
    }
    dwd::tint_class_map(img, classes);
  }
  dwd::write_png_rgb(out, img);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep watershed detector toolkit"};
  app.require_subcommand(1);

  CommonOptions gen_opts, enc_opts, pred_opts, dec_opts, train_opts, eval_opts;
  std::string out_dir, data_dir, map_dir, run_dir, det_dir, truth_dir, checkpoint, resume;
  std::string page_png, det_file, class_map;
  int top = 20;

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(gen, gen_opts);
  gen->add_option("--out", out_dir, "dataset directory")->required();

  auto* enc = app.add_subcommand("encode", "encode ground-truth target maps");
  add_common(enc, enc_opts);
  enc->add_option("--data", data_dir, "dataset directory")->required();
  enc->add_option("--out", out_dir, "map directory")->required();

  auto* pred = app.add_subcommand("predict", "run a trained network and write predicted maps");
  add_common(pred, pred_opts);
  pred->add_option("--data", data_dir, "dataset directory")->required();
  pred->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  pred->add_option("--out", out_dir, "map directory")->required();

  auto* dec = app.add_subcommand("decode", "decode maps into detections");
  add_common(dec, dec_opts);
  dec->add_option("--maps", map_dir, "map directory")->required();
  dec->add_option("--out", out_dir, "detection directory")->required();

  auto* tr = app.add_subcommand("train", "train the network");
  add_common(tr, train_opts);
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--run", run_dir, "run directory")->required();
  tr->add_option("--resume", resume, "checkpoint to resume from");

  auto* ev = app.add_subcommand("eval", "per-class AP at overlaps 0.5 and 0.25");
  add_common(ev, eval_opts);
  ev->add_option("--detections", det_dir, "detection directory")->required();
  ev->add_option("--truth", truth_dir, "dataset directory with ground truth")->required();
  ev->add_option("--out", out_dir, "report directory")->required();
  ev->add_option("--top", top, "rows in the printed table")->check(CLI::PositiveNumber);

  auto* ren = app.add_subcommand("render", "draw detections or a class map over a page");
  ren->add_option("--page", page_png, "page PNG")->required();
  ren->add_option("--detections", det_file, "detection file");
  ren->add_option("--class-map", class_map, "class map file");
  ren->add_option("--out", out_dir, "output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitIo;
  }

  try {
    if (*gen) return cmd_generate(gen_opts, out_dir);
    if (*enc) return cmd_encode(enc_opts, data_dir, out_dir);
    if (*pred) return cmd_predict(pred_opts, data_dir, checkpoint, out_dir);
    if (*dec) return cmd_decode(dec_opts, map_dir, out_dir);
    if (*tr) return cmd_train(train_opts, data_dir, run_dir, resume);
    if (*ev) return cmd_eval(eval_opts, det_dir, truth_dir, out_dir, top);
    if (*ren) return cmd_render(page_png, det_file, class_map, out_dir);
  } catch (const dwd::IoError& e) {
    std::cerr << "dwd: " << e.what() << "\n";
    return kExitIo;
  } catch (const dwd::UsageError& e) {
    std::cerr << "dwd: " << e.what() << "\n";
    return kExitIo;
  } catch (const dwd::NumericError& e) {
    std::cerr << "dwd: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const dwd::Error& e) {
    std::cerr << "dwd: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "dwd: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
