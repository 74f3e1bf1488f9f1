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


#include "splatphys/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "splatphys/splat_renderer.hpp"

namespace splatphys {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct KindName {
  RecipeKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {RecipeKind::kStatic, "static"},
    {RecipeKind::kTranslatingCube, "translating_cube"},
    {RecipeKind::kFallingElasticCube, "falling_elastic_cube"},
    {RecipeKind::kTwoMaterials, "two_materials"},
    {RecipeKind::kRotatingBody, "rotating_body"},
};

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::string to_string(RecipeKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  throw std::invalid_argument("unknown recipe kind");
}

RecipeKind parse_recipe_kind(const std::string& name) {
  for (const auto& k : kKindNames) {
    if (name == k.name) return k.kind;
  }
  throw std::invalid_argument("unknown recipe '" + name + "'");
}

int SceneRecipe::particle_count() const {
  int n = 0;
  for (const auto& o : objects) n += o.per_axis * o.per_axis * o.per_axis;
  return n;
}

void SceneRecipe::validate() const {
  if (particle_count() < 8) {
    throw std::invalid_argument("recipe: at least 8 particles required");
  }
  if (frames < 2) throw std::invalid_argument("recipe: at least 2 frames required");
  if (train_frames < 1 || train_frames >= frames) {
    throw std::invalid_argument("recipe: train frames must lie in [1, frames)");
  }
  if (cameras < 1 || width < 1 || height < 1) {
    throw std::invalid_argument("recipe: empty camera ring or image");
  }
  for (const auto& o : objects) {
    const auto& m = o.material;
    if (!(m.youngs_modulus > 0.0) || !(m.density > 0.0) ||
        !(m.poisson_ratio >= 0.0 && m.poisson_ratio < kMaxPoisson)) {
      throw std::invalid_argument("recipe: material outside E > 0, 0 <= nu < 0.45, rho > 0");
    }
    if (o.per_axis < 1 || !(o.side > 0.0)) {
      throw std::invalid_argument("recipe: empty object");
    }
  }
  sim.validate();
}

SceneRecipe default_recipe(RecipeKind kind) {
  SceneRecipe r;
  r.kind = kind;
  r.fov_y = 0.5;
  r.sim.cells = 16;
  r.sim.cell_width = 1.0 / 16.0;
  r.sim.dt = 2e-3;
  r.sim.substeps_per_frame = 10;
  ObjectSpec cube;
  switch (kind) {
    case RecipeKind::kStatic:
      cube.center = Vec3(0.5, 0.4, 0.5);
      r.objects = {cube};
      break;
    case RecipeKind::kTranslatingCube:
      r.sim.gravity = Vec3::Zero();
      cube.center = Vec3(0.35, 0.4, 0.5);
      cube.velocity = Vec3(0.15, 0.05, -0.05);
      r.objects = {cube};
      break;
    case RecipeKind::kFallingElasticCube:
      cube.center = Vec3(0.4, 0.42, 0.5);
      cube.velocity = Vec3(0.4, 0.5, 0.2);
      r.objects = {cube};
      break;
    case RecipeKind::kTwoMaterials: {
      ObjectSpec a = cube, b = cube;
      a.side = b.side = 0.2;
      a.center = Vec3(0.32, 0.42, 0.5);
      b.center = Vec3(0.68, 0.42, 0.5);
      a.velocity = Vec3(-0.1, 0.4, 0.1);
      b.velocity = Vec3(0.1, 0.1, -0.1);
      b.material.youngs_modulus = 4e4;
      a.color = Vec3(0.8, 0.4, 0.2);
      b.color = Vec3(0.2, 0.5, 0.8);
      r.objects = {a, b};
      break;
    }
    case RecipeKind::kRotatingBody:
      r.sim.gravity = Vec3::Zero();
      cube.center = Vec3(0.5, 0.45, 0.5);
      cube.velocity = Vec3(0.05, 0.0, 0.0);
      cube.angular_velocity = Vec3(0.0, 1.5, 0.5);
      r.objects = {cube};
      break;
  }
  return r;
}

Scene ground_truth_scene(const SceneRecipe& recipe, std::uint64_t seed) {
  recipe.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  Scene scene;
  scene.sh_degree = 0;
  scene.bounds.lo = recipe.sim.origin;
  scene.bounds.hi = recipe.sim.origin + Vec3::Constant(recipe.sim.cells * recipe.sim.cell_width);
  for (const auto& o : recipe.objects) {
    const double spacing = o.side / o.per_axis;
    const double volume = spacing * spacing * spacing;
    for (int i = 0; i < o.per_axis; ++i) {
      for (int j = 0; j < o.per_axis; ++j) {
        for (int k = 0; k < o.per_axis; ++k) {
          GaussianParticle p;
          const Vec3 offset = (Vec3(i, j, k) + Vec3::Constant(0.5)) * spacing -
                              Vec3::Constant(0.5 * o.side);
          p.position = o.center + offset;
          p.log_scale = Vec3::Constant(std::log(0.5 * spacing));
          p.opacity_logit = 3.0;
          const double shade = ((i + j + k) % 2 == 0) ? 1.0 : 0.7;
          for (int c = 0; c < 3; ++c) {
            const double v = std::clamp(o.color[c] * shade + jitter(rng), 0.02, 0.98);
            p.color[c] = logit(v);
          }
          p.rest_volume = volume;
          p.mass = o.material.density * volume;
          p.velocity = o.velocity + o.angular_velocity.cross(offset);
          scene.particles.push_back(p);
        }
      }
    }
  }
  scene.validate();
  return scene;
}

Dataset generate_dataset(const SceneRecipe& recipe, std::uint64_t seed) {
  const Scene scene = ground_truth_scene(recipe, seed);
  Dataset d;
  d.recipe = to_string(recipe.kind);
  d.seed = seed;
  d.cameras = camera_ring(recipe.cameras, recipe.camera_radius, recipe.camera_height,
                          recipe.camera_target, recipe.fov_y, recipe.width,
                          recipe.height);
  d.train_frame_count = recipe.train_frames;
  d.extrapolate_frame_count = recipe.frames - recipe.train_frames;
  d.dynamic = recipe.kind != RecipeKind::kStatic;
  d.sim = recipe.sim;

  std::vector<double> mu, lambda;
  for (std::size_t o = 0; o < recipe.objects.size(); ++o) {
    const auto& spec = recipe.objects[o];
    const int count = spec.per_axis * spec.per_axis * spec.per_axis;
    const Lame lame = lame_from_material(spec.material);
    for (int i = 0; i < count; ++i) {
      d.labels.push_back(static_cast<int>(o));
      mu.push_back(lame.mu);
      lambda.push_back(lame.lambda);
    }
    d.materials.push_back(spec.material);
    d.initial_velocities.push_back(spec.velocity);
    d.angular_velocities.push_back(spec.angular_velocity);
  }
  ParticleState state;
  ParticleBody body;
  for (const auto& p : scene.particles) {
    d.points.push_back(p.position);
    d.volumes.push_back(p.rest_volume);
    state.positions.push_back(p.position);
    state.velocities.push_back(p.velocity);
    state.deformation.push_back(Mat3::Identity());
    body.mass.push_back(p.mass);
    body.volume.push_back(p.rest_volume);
  }

  d.frames.assign(d.cameras.size(), {});
  if (!d.dynamic) {
    for (std::size_t c = 0; c < d.cameras.size(); ++c) {
      const Image im = quantize_8bit(render(scene, d.cameras[c]));
      d.frames[c].assign(recipe.frames, im);
    }
    return d;
  }
  for (int f = 0; f < recipe.frames; ++f) {
    if (f > 0) {
      for (int s = 0; s < recipe.sim.substeps_per_frame; ++s) {
        state = substep(state, body, mu, lambda, recipe.sim);
      }
    }
    const Deformation def{state.positions, state.deformation};
    for (std::size_t c = 0; c < d.cameras.size(); ++c) {
      d.frames[c].push_back(quantize_8bit(render(scene, d.cameras[c], &def)));
    }
  }
  return d;
}

void Dataset::validate() const {
  if (cameras.empty()) throw std::invalid_argument("dataset: no cameras");
  if (frames.size() != cameras.size()) {
    throw std::invalid_argument("dataset: one image sequence per camera required");
  }
  if (train_frame_count < 1 || extrapolate_frame_count < 0) {
    throw std::invalid_argument("dataset: bad frame split");
  }
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    cameras[c].validate();
    if (cameras[c].width != width() || cameras[c].height != height()) {
      throw std::invalid_argument("dataset: cameras disagree on resolution");
    }
    if (static_cast<int>(frames[c].size()) != frame_count()) {
      throw std::invalid_argument("dataset: camera " + std::to_string(c) +
                                  " has the wrong number of frames");
    }
    for (const auto& im : frames[c]) {
      if (im.width != width() || im.height != height()) {
        throw std::invalid_argument("dataset: image resolution mismatch");
      }
    }
  }
  if (points.size() != volumes.size() || points.size() != labels.size()) {
    throw std::invalid_argument("dataset: point cloud arrays disagree in length");
  }
  if (materials.size() != initial_velocities.size()) {
    throw std::invalid_argument("dataset: ground truth arrays disagree in length");
  }
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string numbered(const char* prefix, int i, int width, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*d%s", prefix, width, i, suffix);
  return buf;
}

fs::path camera_path(int c) { return fs::path("cameras") / numbered("cam_", c, 2, ".json"); }
fs::path frame_path(int c, int f) {
  return fs::path("images") / numbered("cam_", c, 2, "") / numbered("frame_", f, 3, ".png");
}

}  // namespace

void write_camera(const fs::path& path, const Camera& camera) {
  json j;
  json m = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m.push_back(camera.world_to_camera(r, c));
  }
  j["world_to_camera"] = m;
  j["fx"] = camera.fx;
  j["fy"] = camera.fy;
  j["cx"] = camera.cx;
  j["cy"] = camera.cy;
  j["width"] = camera.width;
  j["height"] = camera.height;
  write_text(path, j.dump(2) + "\n");
}

Camera read_camera(const fs::path& path) {
  const json j = read_json(path);
  Camera cam;
  try {
    const auto& m = j.at("world_to_camera");
    if (m.size() != 16) throw std::runtime_error("world_to_camera needs 16 values");
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) cam.world_to_camera(r, c) = m.at(4 * r + c).get<double>();
    }
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    cam.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return cam;
}

void write_dataset(const Dataset& d, const fs::path& dir) {
  d.validate();
  std::error_code ec;
  fs::create_directories(dir / "cameras", ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  json m;
  m["recipe"] = d.recipe;
  m["seed"] = d.seed;
  m["dynamic"] = d.dynamic;
  m["fps"] = d.fps();
  m["train_frame_count"] = d.train_frame_count;
  m["extrapolate_frame_count"] = d.extrapolate_frame_count;
  m["width"] = d.width();
  m["height"] = d.height();
  json sim;
  sim["origin"] = vec_json(d.sim.origin);
  sim["cells"] = d.sim.cells;
  sim["cell_width"] = d.sim.cell_width;
  sim["dt"] = d.sim.dt;
  sim["substeps_per_frame"] = d.sim.substeps_per_frame;
  sim["gravity"] = vec_json(d.sim.gravity);
  sim["boundary"] = d.sim.boundary;
  sim["min_j"] = d.sim.min_j;
  m["sim"] = sim;
  json cams = json::array();
  for (std::size_t c = 0; c < d.cameras.size(); ++c) {
    const int ci = static_cast<int>(c);
    write_camera(dir / camera_path(ci), d.cameras[c]);
    json frames = json::array();
    fs::create_directories(dir / frame_path(ci, 0).parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create image directory: " + ec.message());
    for (int f = 0; f < d.frame_count(); ++f) {
      write_png(dir / frame_path(ci, f), d.frames[c][f]);
      frames.push_back(frame_path(ci, f).generic_string());
    }
    cams.push_back({{"file", camera_path(ci).generic_string()}, {"frames", frames}});
  }
  m["cameras"] = cams;
  json pts = json::array();
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    pts.push_back({{"position", vec_json(d.points[i])},
                   {"volume", d.volumes[i]},
                   {"label", d.labels[i]}});
  }
  m["points"] = pts;
  json objects = json::array();
  for (std::size_t o = 0; o < d.materials.size(); ++o) {
    objects.push_back({{"youngs_modulus", d.materials[o].youngs_modulus},
                       {"poisson_ratio", d.materials[o].poisson_ratio},
                       {"density", d.materials[o].density},
                       {"initial_velocity", vec_json(d.initial_velocities[o])},
                       {"angular_velocity", vec_json(d.angular_velocities[o])}});
  }
  m["objects"] = objects;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  Dataset d;
  try {
    d.recipe = m.at("recipe").get<std::string>();
    d.seed = m.at("seed").get<std::uint64_t>();
    d.dynamic = m.at("dynamic").get<bool>();
    d.train_frame_count = m.at("train_frame_count").get<int>();
    d.extrapolate_frame_count = m.at("extrapolate_frame_count").get<int>();
    const auto& sim = m.at("sim");
    d.sim.origin = json_vec(sim.at("origin"));
    d.sim.cells = sim.at("cells").get<int>();
    d.sim.cell_width = sim.at("cell_width").get<double>();
    d.sim.dt = sim.at("dt").get<double>();
    d.sim.substeps_per_frame = sim.at("substeps_per_frame").get<int>();
    d.sim.gravity = json_vec(sim.at("gravity"));
    d.sim.boundary = sim.at("boundary").get<int>();
    d.sim.min_j = sim.at("min_j").get<double>();
    const int width = m.at("width").get<int>();
    const int height = m.at("height").get<int>();
    for (const auto& c : m.at("cameras")) {
      d.cameras.push_back(read_camera(dir / c.at("file").get<std::string>()));
      std::vector<Image> frames;
      for (const auto& f : c.at("frames")) {
        const fs::path p = dir / f.get<std::string>();
        if (!fs::exists(p)) throw std::runtime_error("missing image " + p.string());
        Image im = read_png(p);
        if (im.width != width || im.height != height) {
          throw std::runtime_error(p.string() + ": expected " + std::to_string(width) +
                                   "x" + std::to_string(height));
        }
        frames.push_back(std::move(im));
      }
      d.frames.push_back(std::move(frames));
    }
    for (const auto& p : m.at("points")) {
      d.points.push_back(json_vec(p.at("position")));
      d.volumes.push_back(p.at("volume").get<double>());
      d.labels.push_back(p.at("label").get<int>());
    }
    for (const auto& o : m.at("objects")) {
      MaterialParams mat;
      mat.youngs_modulus = o.at("youngs_modulus").get<double>();
      mat.poisson_ratio = o.at("poisson_ratio").get<double>();
      mat.density = o.at("density").get<double>();
      d.materials.push_back(mat);
      d.initial_velocities.push_back(json_vec(o.at("initial_velocity")));
      d.angular_velocities.push_back(json_vec(o.at("angular_velocity")));
    }
    d.validate();
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "manifest.json").string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error((dir / "manifest.json").string() + ": " + e.what());
  }
  return d;
}

}  // namespace splatphys
