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


// End-to-end optimization of Gaussian appearance, velocity fields and
// materials against multi-view image sequences.
//
// Two pathways predict particle positions at frame times:
//   MPM: rollout from the canonical positions with v(p0, 0) and decoded
//        materials; covariances follow the deformation gradient.
//   VFD: RK4 integration of the velocity field.
// With both on the loss adds lambda_phys * mean |x_mpm - x_vfd|^2.

#ifndef SPLATPHYS_TRAINER_HPP_
#define SPLATPHYS_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "splatphys/dataset.hpp"
#include "splatphys/gaussian_scene.hpp"
#include "splatphys/material_model.hpp"
#include "splatphys/metrics.hpp"
#include "splatphys/mpm.hpp"
#include "splatphys/nn.hpp"
#include "splatphys/splat_renderer.hpp"
#include "splatphys/velocity_field.hpp"

namespace splatphys {

struct ModelConfig {
  bool ipi = true;  // codes and materials decoded from position
  bool vfd = true;  // divergence-free velocity field
  bool mpm = true;  // simulate with MPM
  VelocityFieldConfig velocity;
  MaterialDecoderConfig material;
  MaterialParams initial_material;
  // Initial Gaussian opacity (probability) and scale relative to the
  // particle spacing cbrt(volume).
  double initial_opacity = 0.5;
  double initial_scale = 0.5;
};

struct TrainConfig {
  ModelConfig model;
  double lambda_ssim = 0.2;
  double lambda_phys = 0.1;
  double network_lr = 1e-3;
  double gaussian_lr = 1e-2;  // also free per-particle codes and materials
  // Appearance step size during the dynamics stage. Zero keeps the static
  // reconstruction fixed, which stops appearance from absorbing motion.
  double dynamic_gaussian_lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int static_iterations = 2000;
  int iterations = 500;  // dynamics stage
  // Frames sampled per dynamics iteration; 0 uses every frame in the
  // current horizon.
  int frames_per_iteration = 8;
  // The horizon grows linearly from `initial_horizon` frames to the full
  // training window over `horizon_growth` iterations.
  int initial_horizon = 10;
  int horizon_growth = 0;
  int rk4_steps_per_frame = 2;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument when both VFD and MPM are off or a value
  // is out of range.
  void validate() const;
};

// JSON with exactly the TrainConfig fields (model fields under "model").
// Missing keys keep their defaults; unknown keys throw
// std::invalid_argument.
TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& config);
TrainConfig load_train_config(const std::filesystem::path& path);

// Learnable state for one scene.
class PhysicsModel {
 public:
  PhysicsModel(const ModelConfig& config, const std::vector<Vec3>& points,
               const std::vector<double>& volumes, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t size() const { return volumes_.size(); }
  const Tensor& canonical_positions() const { return positions_; }
  const std::vector<double>& volumes() const { return volumes_; }

  GaussianTensors gaussians() const;
  // Per-particle latent codes z, (n, D).
  Tensor codes() const;
  MaterialTensors materials() const;
  // Velocity field as a function of (positions, t) for the given codes.
  VelocityFn velocity_fn(const Tensor& codes) const;
  // v(p0, 0), (n, 3).
  Tensor initial_velocity(const Tensor& codes) const;
  // Mass from the configured density, which stays fixed: the dynamics only
  // see E / rho, so images cannot separate the two.
  std::shared_ptr<const ParticleBody> body() const;

  ParameterRefs gaussian_parameters();
  // Networks (velocity and material) or, with IPI off, the free
  // per-particle codes and materials.
  ParameterRefs physics_parameters();
  ParameterRefs parameters();
  // Every parameter the model owns, including ones the configuration
  // leaves unused; this is what checkpoints store.
  ParameterRefs stored_parameters();
  std::vector<const Parameter*> stored_parameters() const;
  // Gaussian appearance attributes.
  bool appearance(const Parameter* p) const;
  // Free per-particle codes and materials (IPI off).
  bool per_particle(const Parameter* p) const;

  VelocityField& velocity_field() { return velocity_; }
  MaterialDecoder& material_decoder() { return decoder_; }

  // Scene with the current appearance at the canonical positions.
  Scene scene() const;

 private:
  ModelConfig config_;
  Tensor positions_;
  std::vector<double> volumes_;
  Parameter rotations_{"gaussians.rotations", {}};
  Parameter log_scales_{"gaussians.log_scales", {}};
  Parameter opacity_logits_{"gaussians.opacity_logits", {}};
  Parameter colors_{"gaussians.colors", {}};
  VelocityField velocity_;
  Mlp plain_velocity_;  // VFD off: [z, gamma(t)] -> v
  MaterialDecoder decoder_;
  Mlp code_net_;        // VFD off, IPI on: gamma(p0) -> z
  Parameter free_codes_{"free.codes", {}};
  Parameter free_material_{"free.raw_material", {}};
};

// Adam with per-parameter step sizes.
class Adam {
 public:
  Adam(double beta1, double beta2, double epsilon)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}
  void step(Parameter& p, const Tensor& grad, double lr);

 private:
  struct Moments {
    std::vector<double> m, v;
    long steps = 0;
  };
  double beta1_, beta2_, epsilon_;
  std::map<std::string, Moments> state_;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int iteration, const std::string& pathway,
                   const std::string& detail);
  int iteration() const { return iteration_; }
  const std::string& pathway() const { return pathway_; }

 private:
  int iteration_;
  std::string pathway_;
};

struct HistoryRow {
  int iteration = 0;
  std::string stage;  // "static" or "dynamic"
  double loss = 0.0;
  double psnr = 0.0;
};

struct TrainResult {
  std::vector<HistoryRow> history;
  // Parameters that never received a nonzero gradient.
  std::vector<std::string> dead_parameters;
};

using ProgressFn = std::function<void(const HistoryRow&)>;

// Throws TrainingDiverged on a non-finite loss or a simulator failure.
TrainResult train(const Dataset& dataset, PhysicsModel& model,
                  const TrainConfig& config, const ProgressFn& progress = {});

// Predicted particle positions (and deformation with MPM) at frames
// 0..frames-1, detached.
struct Trajectory {
  std::vector<Tensor> positions;    // (n, 3) per frame
  std::vector<Tensor> deformation;  // (n, 9) per frame, MPM only
};
Trajectory predict(const PhysicsModel& model, const SimConfig& sim, int frames,
                   int rk4_steps_per_frame = 2);

struct FrameMetrics {
  int frame = 0;
  double psnr = 0.0;  // mean over cameras
  double ssim = 0.0;
};

struct Extrapolation {
  std::vector<FrameMetrics> frames;
  std::vector<std::vector<Image>> images;  // [camera][held-out frame]
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

// Renders the held-out frames and scores them against the dataset.
// `horizon` limits the number of held-out frames (negative: all).
Extrapolation extrapolate(const PhysicsModel& model, const Dataset& dataset,
                          int horizon = -1, int rk4_steps_per_frame = 2);

// Per-particle [E, nu, rho, v(p0, t_1), ..., v(p0, t_m)], unstandardized.
std::vector<std::vector<double>> physics_signature(
    const PhysicsModel& model, const std::vector<double>& timestamps);

inline constexpr int kSignatureTimestamps = 10;
// kSignatureTimestamps instants spread evenly over the training window,
// both ends included.
std::vector<double> signature_timestamps(const Dataset& dataset);

// Cluster labels from k-means over standardized physics signatures.
KMeansResult segment_particles(const PhysicsModel& model, const Dataset& dataset,
                               int clusters, std::uint64_t seed = 0);

// Bit-exact JSON round trip of the model configuration, point cloud and
// every parameter value.
void save_checkpoint(const std::filesystem::path& path, const PhysicsModel& model);
PhysicsModel load_checkpoint(const std::filesystem::path& path);

// CSV with header "iteration,stage,loss,psnr".
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<HistoryRow>& history);

}  // namespace splatphys

#endif  // SPLATPHYS_TRAINER_HPP_
