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


// Synthetic multi-view datasets with known physics.

#ifndef SPLATPHYS_DATASET_HPP_
#define SPLATPHYS_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splatphys/gaussian_scene.hpp"
#include "splatphys/image.hpp"
#include "splatphys/material_model.hpp"
#include "splatphys/mpm.hpp"

namespace splatphys {

enum class RecipeKind {
  kStatic,
  kTranslatingCube,
  kFallingElasticCube,
  kTwoMaterials,
  kRotatingBody,
};

std::string to_string(RecipeKind kind);
// Accepts the names printed by to_string, e.g. "falling_elastic_cube".
RecipeKind parse_recipe_kind(const std::string& name);

// A box of particles on a regular lattice.
struct ObjectSpec {
  Vec3 center = Vec3(0.5, 0.5, 0.5);
  double side = 0.25;
  int per_axis = 4;
  MaterialParams material;
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();  // about the object center
  Vec3 color = Vec3(0.8, 0.4, 0.2);
};

struct SceneRecipe {
  RecipeKind kind = RecipeKind::kStatic;
  std::vector<ObjectSpec> objects;
  int cameras = 4;
  double camera_radius = 1.6;
  double camera_height = 0.5;  // above the look-at target
  Vec3 camera_target = Vec3(0.5, 0.4, 0.5);
  double fov_y = 0.75;
  int frames = 89;
  int train_frames = 67;
  int width = 64;
  int height = 64;
  SimConfig sim;

  int particle_count() const;
  double fps() const { return 1.0 / sim.frame_time(); }
  // Throws std::invalid_argument on fewer than 8 particles, fewer than two
  // frames, a split outside [1, frames), or a material out of range.
  void validate() const;
};

// Desk-scale defaults: 64 x 64 images, four cameras, 89 frames split 67 / 22.
SceneRecipe default_recipe(RecipeKind kind);

struct Dataset {
  std::string recipe;
  std::uint64_t seed = 0;
  std::vector<Camera> cameras;
  std::vector<std::vector<Image>> frames;  // [camera][frame], 8-bit levels
  int train_frame_count = 0;
  int extrapolate_frame_count = 0;
  bool dynamic = true;
  SimConfig sim;

  // Initialization point cloud: canonical particle positions, rest volumes
  // and object labels. Appearance is not given.
  std::vector<Vec3> points;
  std::vector<double> volumes;
  std::vector<int> labels;

  // Ground truth, one entry per object.
  std::vector<MaterialParams> materials;
  std::vector<Vec3> initial_velocities;
  std::vector<Vec3> angular_velocities;

  double fps() const { return 1.0 / sim.frame_time(); }
  double frame_time(int frame) const { return frame * sim.frame_time(); }
  int frame_count() const { return train_frame_count + extrapolate_frame_count; }
  int width() const { return cameras.empty() ? 0 : cameras[0].width; }
  int height() const { return cameras.empty() ? 0 : cameras[0].height; }
  // Throws std::invalid_argument when image sizes or frame counts disagree.
  void validate() const;
};

// Ground-truth scene: particles with appearance and physical state at t = 0.
Scene ground_truth_scene(const SceneRecipe& recipe, std::uint64_t seed);

// Simulates and renders the recipe. Deterministic per seed. Rethrows
// CflViolation from the ground-truth rollout.
Dataset generate_dataset(const SceneRecipe& recipe, std::uint64_t seed);

// Layout: manifest.json, cameras/cam_NN.json,
// images/cam_NN/frame_NNN.png. Throws std::runtime_error when the
// directory cannot be written.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
// Throws std::runtime_error on a missing or inconsistent file.
Dataset load_dataset(const std::filesystem::path& dir);

// Camera file: {"world_to_camera": [16 row-major], "fx", "fy", "cx", "cy",
// "width", "height"}.
void write_camera(const std::filesystem::path& path, const Camera& camera);
Camera read_camera(const std::filesystem::path& path);

}  // namespace splatphys

#endif  // SPLATPHYS_DATASET_HPP_
