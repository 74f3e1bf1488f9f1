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

// End-to-end acceptance checks. Prints one PASS or FAIL line per criterion
// and exits nonzero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "splatphys/dataset.hpp"
#include "splatphys/metrics.hpp"
#include "splatphys/selftest.hpp"
#include "splatphys/trainer.hpp"

namespace {

using namespace splatphys;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const fs::path kWork = SPLATPHYS_ACCEPTANCE_WORKDIR;
const fs::path kConfigs = SPLATPHYS_CONFIG_DIR;
const std::string kCli = SPLATPHYS_CLI_PATH;

struct Verdict {
  bool passed = true;
  std::string summary;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, a);
  return buf;
}

void add(Verdict& v, const PropertyResult& r) {
  v.passed = v.passed && r.passed;
  if (!v.summary.empty()) v.summary += "; ";
  v.summary += r.name + " " + fmt("%.3e", r.measured) + " < " + fmt("%.0e", r.tolerance);
  if (!r.passed && !r.detail.empty()) v.summary += " [" + r.detail + "]";
}

void add(Verdict& v, bool ok, const std::string& text) {
  v.passed = v.passed && ok;
  if (!v.summary.empty()) v.summary += "; ";
  v.summary += text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs a shell command, returning its exit status and standard output.
std::pair<int, std::string> shell(const std::string& command) {
  std::string output;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return {-1, output};
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

Vec3 mean_initial_velocity(const PhysicsModel& model) {
  const Tensor v = model.initial_velocity(model.codes());
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < model.size(); ++i) sum += Vec3(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
  return sum / static_cast<double>(model.size());
}

double mean_modulus(const PhysicsModel& model) {
  const MaterialTensors m = model.materials();
  double sum = 0.0;
  for (double e : m.youngs_modulus.values()) sum += e;
  return sum / static_cast<double>(model.size());
}

// --------------------------------------------------------------------------

Verdict autodiff_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  add(v, check_primitive_gradients(100));
  const double s = seconds_since(t0);
  add(v, s < 30.0, fmt("100 trials per op in %.1f s < 30 s", s));
  return v;
}

Verdict renderer_equivalence() {
  Verdict v;
  add(v, check_render_equivalence(20));
  add(v, check_render_gradients(20));
  return v;
}

Verdict divergence_free() {
  Verdict v;
  add(v, check_divergence_free(1000));
  return v;
}

Verdict mpm_conservation() {
  Verdict v;
  add(v, check_mass_conservation(2000));
  const auto t0 = Clock::now();
  add(v, check_momentum_conservation(2000));
  const double s = seconds_since(t0);
  add(v, s < 60.0, fmt("2000 substeps in %.2f s < 60 s", s));
  return v;
}

Verdict ballistic() {
  Verdict v;
  add(v, check_ballistic());
  return v;
}

Verdict simulation_gradients() {
  Verdict v;
  add(v, check_launch_gradient());
  add(v, check_modulus_gradient());
  return v;
}

// Shared by the inverse-recovery and protocol criteria.
struct FallingCube {
  Dataset data;
  fs::path dir;
  double generate_seconds = 0.0;
};

std::optional<FallingCube> g_falling;

const FallingCube& falling_cube() {
  if (!g_falling) {
    FallingCube f;
    f.dir = kWork / "falling_elastic_cube";
    fs::remove_all(f.dir);
    const auto t0 = Clock::now();
    write_dataset(generate_dataset(default_recipe(RecipeKind::kFallingElasticCube), 0), f.dir);
    f.data = load_dataset(f.dir);
    f.generate_seconds = seconds_since(t0);
    g_falling = std::move(f);
  }
  return *g_falling;
}

Verdict inverse_recovery() {
  Verdict v;
  const FallingCube& cube = falling_cube();
  const Dataset& d = cube.data;
  const TrainConfig config = load_train_config(kConfigs / "falling_elastic_cube.json");

  const auto t0 = Clock::now();
  PhysicsModel full(config.model, d.points, d.volumes, config.seed);
  train(d, full, config);
  const Extrapolation full_ex = extrapolate(full, d, -1, config.rk4_steps_per_frame);
  const double full_seconds = seconds_since(t0) + cube.generate_seconds;

  TrainConfig ablation = config;
  ablation.model.mpm = false;
  PhysicsModel vfd(ablation.model, d.points, d.volumes, ablation.seed);
  train(d, vfd, ablation);
  const Extrapolation vfd_ex = extrapolate(vfd, d, -1, ablation.rk4_steps_per_frame);

  const Vec3 v0_true = d.initial_velocities.at(0);
  const Vec3 v0 = mean_initial_velocity(full);
  const double v0_error = (v0 - v0_true).norm() / v0_true.norm();
  const double e_true = d.materials.at(0).youngs_modulus;
  const double e_ratio = mean_modulus(full) / e_true;
  const double gap = full_ex.mean_psnr - vfd_ex.mean_psnr;

  std::ostringstream v0_text;
  v0_text << "v0 (" << fmt("%.3f", v0.x()) << ", " << fmt("%.3f", v0.y()) << ", "
          << fmt("%.3f", v0.z()) << ") error " << fmt("%.1f%%", 100 * v0_error) << " < 10%";
  add(v, v0_error < 0.10, v0_text.str());
  add(v, e_ratio > 0.5 && e_ratio < 2.0,
      "E " + fmt("%.0f", e_ratio * e_true) + " ratio " + fmt("%.2f", e_ratio) + " within x2");
  add(v, gap >= 1.0,
      "held-out PSNR full " + fmt("%.2f", full_ex.mean_psnr) + " dB vs VFD-only " +
          fmt("%.2f", vfd_ex.mean_psnr) + " dB, gap " + fmt("%.2f", gap) + " >= 1 dB");
  add(v, full_seconds < 900.0, "full run " + fmt("%.0f", full_seconds) + " s < 900 s");
  return v;
}

Verdict segmentation() {
  Verdict v;
  const fs::path dir = kWork / "two_materials";
  fs::remove_all(dir);
  write_dataset(generate_dataset(default_recipe(RecipeKind::kTwoMaterials), 0), dir);
  const Dataset d = load_dataset(dir);
  const TrainConfig config = load_train_config(kConfigs / "two_materials.json");
  PhysicsModel model(config.model, d.points, d.volumes, config.seed);
  train(d, model, config);
  const SegmentationScores s = segmentation_scores(segment_particles(model, d, 2).labels, d.labels);
  add(v, s.miou >= 0.95, "mIoU " + fmt("%.4f", s.miou) + " >= 0.95");
  add(v, s.f1 >= 0.97, "F1 " + fmt("%.4f", s.f1) + " >= 0.97");
  return v;
}

Verdict protocol() {
  Verdict v;
  const FallingCube& cube = falling_cube();
  const nlohmann::json manifest = nlohmann::json::parse(slurp(cube.dir / "manifest.json"));
  const int train = manifest.at("train_frame_count").get<int>();
  const int held_out = manifest.at("extrapolate_frame_count").get<int>();
  add(v, train == 67 && held_out == 22,
      "manifest split " + std::to_string(train) + "/" + std::to_string(held_out) + " = 67/22");

  std::size_t images = 0;
  for (const auto& cam : fs::directory_iterator(cube.dir / "images")) {
    for (const auto& f : fs::directory_iterator(cam.path())) images += f.is_regular_file();
  }
  const std::size_t expected = cube.data.cameras.size() * 89;
  add(v, images == expected,
      std::to_string(images) + " images on disk = cameras x 89");

  const std::vector<double> ts = signature_timestamps(cube.data);
  const bool ends = ts.size() == 10 && ts.front() == 0.0 &&
                    ts.back() == cube.data.frame_time(66);
  PhysicsModel model(ModelConfig{}, cube.data.points, cube.data.volumes, 0);
  const auto signature = physics_signature(model, ts);
  const bool width = !signature.empty() && signature[0].size() == 3 + 3 * ts.size();
  add(v, ends && width,
      std::to_string(ts.size()) + " signature timestamps over frames 0..66, " +
          std::to_string(signature.empty() ? 0 : signature[0].size()) + " features");
  return v;
}

Verdict determinism() {
  Verdict v;
  const auto [s1, out1] = shell(kCli + " selftest");
  const auto [s2, out2] = shell(kCli + " selftest");
  add(v, s1 == 0 && s2 == 0 && out1 == out2 && !out1.empty(),
      "selftest output identical across two runs");

  const fs::path dir = kWork / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path data = dir / "data";
  const auto [g, gout] = shell(kCli + " generate --recipe falling_elastic_cube --frames 12 " +
                               "--resolution 32x32 --out " + data.string());
  const fs::path cfg = dir / "config.json";
  std::ofstream(cfg) << R"({"static_iterations": 20, "iterations": 10,
                           "frames_per_iteration": 4, "initial_horizon": 3,
                           "horizon_growth": 5, "model": {"position_frequencies": 2}})";
  bool same = g == 0;
  for (const char* run : {"run_a", "run_b"}) {
    const auto [t, tout] = shell(kCli + " train --seed 7 --data " + data.string() +
                                 " --config " + cfg.string() + " --out " +
                                 (dir / run).string());
    same = same && t == 0;
  }
  for (const char* f : {"checkpoint.json", "history.csv"}) {
    const std::string a = slurp(dir / "run_a" / f), b = slurp(dir / "run_b" / f);
    same = same && !a.empty() && a == b;
  }
  add(v, same, "fixed-seed training checkpoint and history byte-identical across two runs");
  return v;
}

}  // namespace

int main() {
  fs::create_directories(kWork);
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"1 autodiff_oracle", autodiff_oracle},
      {"2 renderer_equivalence", renderer_equivalence},
      {"3 divergence_free_velocity", divergence_free},
      {"4 mpm_conservation", mpm_conservation},
      {"5 ballistic_oracle", ballistic},
      {"6 simulation_gradients", simulation_gradients},
      {"7 inverse_recovery", inverse_recovery},
      {"8 segmentation", segmentation},
      {"9 protocol_fidelity", protocol},
      {"10 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.passed;
    std::cout << (v.passed ? "PASS " : "FAIL ") << "criterion " << name << ": " << v.summary
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
