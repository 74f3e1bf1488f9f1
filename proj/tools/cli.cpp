// Copyright 2026 The splatphys Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "splatphys/dataset.hpp"
#include "splatphys/image.hpp"
#include "splatphys/metrics.hpp"
#include "splatphys/selftest.hpp"
#include "splatphys/splat_renderer.hpp"
#include "splatphys/trainer.hpp"

namespace splatphys::cli {
namespace {

namespace fs = std::filesystem;

// Bad user input detected after flag parsing; reported with exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GenerateArgs {
  std::string recipe = "falling_elastic_cube";
  std::uint64_t seed = 0;
  std::string out;
  int frames = 0;
  std::string resolution;
};

struct TrainArgs {
  std::string data, config, out;
  std::optional<std::uint64_t> seed;
  int k = 0;
  bool no_mpm = false, no_vfd = false, no_ipi = false;
};

struct ExtrapolateArgs {
  std::string data, checkpoint, out;
  int frames = -1;
};

struct EvaluateArgs {
  std::string data, checkpoint, labels, out, scene;
  int clusters = 0;
};

struct SegmentArgs {
  std::string data, checkpoint, out;
  int clusters = 2;
};

std::pair<int, int> parse_resolution(const std::string& text) {
  static const std::regex re(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw UsageError("--resolution: expected WxH, got '" + text + "'");
  }
  const int w = std::stoi(m[1]), h = std::stoi(m[2]);
  if (w < 11 || h < 11 || w > 4096 || h > 4096) {
    throw UsageError("--resolution: each side must be within [11, 4096]");
  }
  return {w, h};
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create directory " + dir.string());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string frame_name(const char* prefix, int index, int width) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, index);
  return buf;
}

std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read labels file " + path.string());
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size()) {
      throw UsageError("labels file " + path.string() + ": bad line '" + line + "'");
    }
    labels.push_back(v);
  }
  return labels;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  for (int l : labels) out << l << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Loss curve on a log axis, drawn as dark line segments on white.
Image plot_series(const std::vector<double>& ys, int width, int height) {
  Image img(width, height);
  std::fill(img.rgb.begin(), img.rgb.end(), 1.0);
  std::vector<double> logs;
  for (double y : ys) {
    if (std::isfinite(y) && y > 0) logs.push_back(std::log10(y));
  }
  if (logs.size() < 2) return img;
  const auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
  const double lo = *lo_it, span = std::max(*hi_it - lo, 1e-12);
  const int margin = 8;
  auto px = [&](std::size_t i) {
    return margin + (width - 2 * margin - 1) * static_cast<double>(i) / (logs.size() - 1);
  };
  auto py = [&](double v) { return margin + (height - 2 * margin - 1) * (1.0 - (v - lo) / span); };
  for (int x = margin; x < width - margin; ++x)
    for (int c = 0; c < 3; ++c) img.at(x, height - margin, c) = 0.6;
  for (std::size_t i = 0; i + 1 < logs.size(); ++i) {
    const double x0 = px(i), y0 = py(logs[i]), x1 = px(i + 1), y1 = py(logs[i + 1]);
    const int steps = 1 + static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0)));
    for (int s = 0; s <= steps; ++s) {
      const double a = static_cast<double>(s) / steps;
      const int x = static_cast<int>(std::lround(x0 + a * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + a * (y1 - y0)));
      img.at(x, y, 0) = 0.1;
      img.at(x, y, 1) = 0.2;
      img.at(x, y, 2) = 0.6;
    }
  }
  return img;
}

Dataset load_dataset_arg(const std::string& dir) {
  try {
    return load_dataset(dir);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--data: ") + e.what());
  }
}

PhysicsModel load_checkpoint_arg(const std::string& path) {
  try {
    return load_checkpoint(path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--checkpoint: ") + e.what());
  }
}

void check_model_matches(const PhysicsModel& model, const Dataset& data) {
  if (model.size() != data.points.size()) {
    throw UsageError("checkpoint has " + std::to_string(model.size()) +
                     " particles but the dataset has " +
                     std::to_string(data.points.size()));
  }
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  SceneRecipe recipe;
  try {
    recipe = default_recipe(parse_recipe_kind(a.recipe));
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--recipe: ") + e.what());
  }
  if (a.frames != 0) {
    if (a.frames < 2) throw UsageError("--frames must be at least 2");
    // Keep the train / held-out proportion of the default split.
    const int train = static_cast<int>(std::lround(a.frames * static_cast<double>(recipe.train_frames) /
                                                   recipe.frames));
    recipe.frames = a.frames;
    recipe.train_frames = std::clamp(train, 1, a.frames - 1);
  }
  if (!a.resolution.empty()) {
    std::tie(recipe.width, recipe.height) = parse_resolution(a.resolution);
  }
  try {
    recipe.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset d = generate_dataset(recipe, a.seed);
  write_dataset(d, a.out);
  out << "wrote " << a.recipe << " dataset to " << a.out << ": " << d.cameras.size()
      << " cameras, " << d.frame_count() << " frames (" << d.train_frame_count << " train, "
      << d.extrapolate_frame_count << " held out), " << d.points.size() << " particles\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig config;
  if (!a.config.empty()) {
    try {
      config = load_train_config(a.config);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
  }
  if (a.seed) config.seed = *a.seed;
  if (a.k > 0) config.model.velocity.motion_patterns = a.k;
  if (a.no_mpm) config.model.mpm = false;
  if (a.no_vfd) config.model.vfd = false;
  if (a.no_ipi) config.model.ipi = false;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset data = load_dataset_arg(a.data);
  ensure_directory(a.out);
  {
    std::ofstream f(fs::path(a.out) / "config.json");
    f << train_config_to_json(config) << '\n';
  }
  PhysicsModel model(config.model, data.points, data.volumes, config.seed);
  const int total = config.static_iterations + config.iterations;
  const int every = std::max(1, total / 20);
  const TrainResult result = train(data, model, config, [&](const HistoryRow& row) {
    // Iterations are numbered across both stages.
    if (row.iteration % every == 0 || row.iteration + 1 == total) {
      out << row.stage << " " << row.iteration << " loss " << format_double(row.loss)
          << " psnr " << format_double(row.psnr) << '\n';
    }
  });
  save_checkpoint(fs::path(a.out) / "checkpoint.json", model);
  write_history_csv(fs::path(a.out) / "history.csv", result.history);
  std::vector<double> losses;
  for (const HistoryRow& row : result.history) losses.push_back(row.loss);
  write_png(fs::path(a.out) / "loss.png", plot_series(losses, 320, 200));
  for (const std::string& name : result.dead_parameters) {
    out << "warning: parameter " << name << " never received a gradient\n";
  }
  out << "wrote checkpoint.json, history.csv, loss.png and config.json to " << a.out << '\n';
  return kExitOk;
}

int cmd_extrapolate(const ExtrapolateArgs& a, std::ostream& out) {
  const Dataset data = load_dataset_arg(a.data);
  const PhysicsModel model = load_checkpoint_arg(a.checkpoint);
  check_model_matches(model, data);
  if (a.frames == 0 || a.frames < -1) throw UsageError("--frames must be positive");
  const Extrapolation ex = extrapolate(model, data, a.frames);
  ensure_directory(a.out);
  std::ofstream csv(fs::path(a.out) / "extrapolation.csv");
  csv << "frame,psnr,ssim\n";
  for (const FrameMetrics& f : ex.frames) {
    csv << f.frame << ',' << format_double(f.psnr) << ',' << format_double(f.ssim) << '\n';
  }
  for (std::size_t c = 0; c < ex.images.size(); ++c) {
    const fs::path dir = fs::path(a.out) / frame_name("cam_", static_cast<int>(c), 2);
    ensure_directory(dir);
    for (std::size_t k = 0; k < ex.images[c].size(); ++k) {
      write_png(dir / (frame_name("frame_", ex.frames[k].frame, 3) + ".png"), ex.images[c][k]);
    }
  }
  out << "extrapolated " << ex.frames.size() << " frames: mean psnr "
      << format_double(ex.mean_psnr) << " ssim " << format_double(ex.mean_ssim) << '\n';
  return kExitOk;
}

int class_count(const std::vector<int>& labels) {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() && a.labels.empty()) {
    throw UsageError("evaluate needs --checkpoint, --labels or both");
  }
  const Dataset data = load_dataset_arg(a.data);
  const std::string scene = a.scene.empty() ? data.recipe : a.scene;
  std::optional<PhysicsModel> model;
  if (!a.checkpoint.empty()) {
    model.emplace(load_checkpoint_arg(a.checkpoint));
    check_model_matches(*model, data);
  }
  std::ostringstream csv;
  csv << "scene,task,psnr,ssim,miou,f1,precision,recall\n";
  if (model && data.extrapolate_frame_count > 0) {
    const Extrapolation ex = extrapolate(*model, data);
    csv << scene << ",extrapolation," << format_double(ex.mean_psnr) << ','
        << format_double(ex.mean_ssim) << ",,,,\n";
  }
  std::vector<int> predicted;
  if (!a.labels.empty()) {
    predicted = read_labels(a.labels);
  } else if (model) {
    const int k = a.clusters > 0 ? a.clusters : class_count(data.labels);
    predicted = segment_particles(*model, data, k).labels;
  }
  if (!predicted.empty()) {
    if (predicted.size() != data.labels.size()) {
      throw UsageError("expected " + std::to_string(data.labels.size()) +
                       " labels, got " + std::to_string(predicted.size()));
    }
    const SegmentationScores s = segmentation_scores(predicted, data.labels);
    csv << scene << ",segmentation,,," << format_double(s.miou) << ','
        << format_double(s.f1) << ',' << format_double(s.precision) << ','
        << format_double(s.recall) << '\n';
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    const fs::path path(a.out);
    if (path.has_parent_path()) ensure_directory(path.parent_path());
    std::ofstream f(path);
    f << csv.str();
    if (!f) throw std::runtime_error("cannot write " + a.out);
    out << "wrote " << a.out << '\n';
  }
  return kExitOk;
}

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  if (a.clusters < 1) throw UsageError("--clusters must be positive");
  const Dataset data = load_dataset_arg(a.data);
  const PhysicsModel model = load_checkpoint_arg(a.checkpoint);
  check_model_matches(model, data);
  if (static_cast<std::size_t>(a.clusters) > model.size()) {
    throw UsageError("--clusters exceeds the particle count");
  }
  const KMeansResult km = segment_particles(model, data, a.clusters);
  ensure_directory(a.out);
  write_labels(fs::path(a.out) / "labels.txt", km.labels);
  const Scene scene = model.scene();
  const auto palette = label_palette(a.clusters + 1);
  for (std::size_t c = 0; c < data.cameras.size(); ++c) {
    const Camera& cam = data.cameras[c];
    write_indexed_png(fs::path(a.out) / (frame_name("cam_", static_cast<int>(c), 2) + ".png"),
                      cam.width, cam.height, render_labels(scene, cam, km.labels), palette);
  }
  out << "segmented " << model.size() << " particles into " << a.clusters << " clusters";
  if (class_count(data.labels) > 0) {
    const SegmentationScores s = segmentation_scores(km.labels, data.labels);
    out << ": miou " << format_double(s.miou) << " f1 " << format_double(s.f1);
  }
  out << '\n';
  return kExitOk;
}

int cmd_selftest(std::ostream& out) {
  const bool ok = run_selftest([&](const std::string& line) { out << line << '\n'; });
  out << (ok ? "selftest passed\n" : "selftest failed\n");
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentiable physics over Gaussian particle scenes", "splatphys"};
  app.require_subcommand(1);
  app.fallthrough(false);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Render a synthetic dataset with known physics");
  generate->add_option("--recipe", gen.recipe,
                       "static, translating_cube, falling_elastic_cube, two_materials "
                       "or rotating_body")
      ->capture_default_str();
  generate->add_option("--seed", gen.seed, "Appearance jitter seed")->capture_default_str();
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--frames", gen.frames, "Total frames (default 89)");
  generate->add_option("--resolution", gen.resolution, "Image size as WxH (default 64x64)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Fit appearance and physics to a dataset");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--config", tr.config, "Training configuration (JSON)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", tr.seed, "Override the configured seed");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--k", tr.k, "Number of motion patterns")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--no-mpm", tr.no_mpm, "Disable the simulator pathway");
  train_cmd->add_flag("--no-vfd", tr.no_vfd, "Disable the velocity field pathway");
  train_cmd->add_flag("--no-ipi", tr.no_ipi, "Learn free per-particle codes and materials");

  ExtrapolateArgs ex;
  auto* extrap = app.add_subcommand("extrapolate", "Render and score the held-out frames");
  extrap->add_option("--data", ex.data, "Dataset directory")->required();
  extrap->add_option("--checkpoint", ex.checkpoint, "Trained checkpoint")->required();
  extrap->add_option("--out", ex.out, "Output directory")->required();
  extrap->add_option("--frames", ex.frames, "Number of held-out frames (default all)");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Write a metrics table");
  evaluate->add_option("--data", ev.data, "Dataset directory")->required();
  evaluate->add_option("--checkpoint", ev.checkpoint, "Trained checkpoint");
  evaluate->add_option("--labels", ev.labels, "Predicted labels, one per particle")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--clusters", ev.clusters, "k-means clusters (default: class count)");
  evaluate->add_option("--scene", ev.scene, "Scene name for the table (default: recipe)");
  evaluate->add_option("--out", ev.out, "CSV path (default: standard output)");

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Cluster particles by physics signature");
  segment->add_option("--data", seg.data, "Dataset directory")->required();
  segment->add_option("--checkpoint", seg.checkpoint, "Trained checkpoint")->required();
  segment->add_option("--out", seg.out, "Output directory")->required();
  segment->add_option("--clusters", seg.clusters, "Number of clusters")->capture_default_str();

  auto* selftest = app.add_subcommand("selftest", "Run the built-in property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  CLI::App* used = app.get_subcommands().front();
  try {
    if (used == generate) return cmd_generate(gen, out);
    if (used == train_cmd) return cmd_train(tr, out);
    if (used == extrap) return cmd_extrapolate(ex, out);
    if (used == evaluate) return cmd_evaluate(ev, out);
    if (used == segment) return cmd_segment(seg, out);
    if (used == selftest) return cmd_selftest(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << used->help();
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    err << "error: training diverged in the " << e.pathway() << " pathway at iteration "
        << e.iteration() << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace splatphys::cli
