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


#include "splatphys/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "splatphys/metrics.hpp"
#include "splatphys/ops.hpp"

namespace splatphys {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  if (!model.vfd && !model.mpm) {
    throw std::invalid_argument("config: at least one of VFD and MPM must be enabled");
  }
  if (model.velocity.motion_patterns < 1) {
    throw std::invalid_argument("config: motion_patterns must be positive");
  }
  if (lambda_ssim < 0.0 || lambda_ssim > 1.0) {
    throw std::invalid_argument("config: lambda_ssim must lie in [0, 1]");
  }
  if (lambda_phys < 0.0 || network_lr < 0.0 || gaussian_lr < 0.0 ||
      dynamic_gaussian_lr < 0.0) {
    throw std::invalid_argument("config: weights and step sizes must be non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0)) {
    throw std::invalid_argument("config: bad moment decay rates");
  }
  if (static_iterations < 0 || iterations < 0 || frames_per_iteration < 0 ||
      initial_horizon < 1 || horizon_growth < 0 || rk4_steps_per_frame < 1) {
    throw std::invalid_argument("config: negative iteration or frame count");
  }
  const auto& m = model.initial_material;
  if (!(m.youngs_modulus > 0.0) || !(m.density > 0.0) ||
      !(m.poisson_ratio >= 0.0 && m.poisson_ratio < kMaxPoisson)) {
    throw std::invalid_argument("config: initial material out of range");
  }
  if (!(model.initial_opacity > 0.0 && model.initial_opacity < 1.0) ||
      !(model.initial_scale > 0.0)) {
    throw std::invalid_argument("config: bad initial Gaussian opacity or scale");
  }
}

namespace {

// Reads `key` into `out` if present and records it as consumed.
template <typename T>
void take(const json& j, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& seen,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!seen.count(key)) {
      throw std::invalid_argument("config: unknown key '" + where + key + "'");
    }
  }
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
}

json model_json(const ModelConfig& m) {
  return {
      {"ipi", m.ipi},
      {"vfd", m.vfd},
      {"mpm", m.mpm},
      {"motion_patterns", m.velocity.motion_patterns},
      {"code_dims", m.velocity.code_dims},
      {"position_frequencies", m.velocity.position_frequencies},
      {"time_frequencies", m.velocity.time_frequencies},
      {"velocity_hidden_layers", m.velocity.hidden_layers},
      {"velocity_width", m.velocity.width},
      {"neck_output_scale", m.velocity.neck_output_scale},
      {"material_frequencies", m.material.frequencies},
      {"material_hidden_layers", m.material.hidden_layers},
      {"material_width", m.material.width},
      {"initial_youngs_modulus", m.initial_material.youngs_modulus},
      {"initial_poisson_ratio", m.initial_material.poisson_ratio},
      {"density", m.initial_material.density},
      {"initial_opacity", m.initial_opacity},
      {"initial_scale", m.initial_scale},
  };
}

ModelConfig model_from_json(const json& j) {
  require_object(j, "model");
  ModelConfig m;
  std::set<std::string> seen;
  take(j, "ipi", m.ipi, seen);
  take(j, "vfd", m.vfd, seen);
  take(j, "mpm", m.mpm, seen);
  take(j, "motion_patterns", m.velocity.motion_patterns, seen);
  take(j, "code_dims", m.velocity.code_dims, seen);
  take(j, "position_frequencies", m.velocity.position_frequencies, seen);
  take(j, "time_frequencies", m.velocity.time_frequencies, seen);
  take(j, "velocity_hidden_layers", m.velocity.hidden_layers, seen);
  take(j, "velocity_width", m.velocity.width, seen);
  take(j, "neck_output_scale", m.velocity.neck_output_scale, seen);
  take(j, "material_frequencies", m.material.frequencies, seen);
  take(j, "material_hidden_layers", m.material.hidden_layers, seen);
  take(j, "material_width", m.material.width, seen);
  take(j, "initial_youngs_modulus", m.initial_material.youngs_modulus, seen);
  take(j, "initial_poisson_ratio", m.initial_material.poisson_ratio, seen);
  take(j, "density", m.initial_material.density, seen);
  take(j, "initial_opacity", m.initial_opacity, seen);
  take(j, "initial_scale", m.initial_scale, seen);
  reject_unknown(j, seen, "model.");
  return m;
}

}  // namespace

std::string train_config_to_json(const TrainConfig& c) {
  const json j = {
      {"model", model_json(c.model)},
      {"lambda_ssim", c.lambda_ssim},
      {"lambda_phys", c.lambda_phys},
      {"network_lr", c.network_lr},
      {"gaussian_lr", c.gaussian_lr},
      {"dynamic_gaussian_lr", c.dynamic_gaussian_lr},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"epsilon", c.epsilon},
      {"static_iterations", c.static_iterations},
      {"iterations", c.iterations},
      {"frames_per_iteration", c.frames_per_iteration},
      {"initial_horizon", c.initial_horizon},
      {"horizon_growth", c.horizon_growth},
      {"rk4_steps_per_frame", c.rk4_steps_per_frame},
      {"seed", c.seed},
  };
  return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  require_object(j, "top level");
  TrainConfig c;
  std::set<std::string> seen;
  try {
    seen.insert("model");
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    take(j, "lambda_ssim", c.lambda_ssim, seen);
    take(j, "lambda_phys", c.lambda_phys, seen);
    take(j, "network_lr", c.network_lr, seen);
    take(j, "gaussian_lr", c.gaussian_lr, seen);
    take(j, "dynamic_gaussian_lr", c.dynamic_gaussian_lr, seen);
    take(j, "beta1", c.beta1, seen);
    take(j, "beta2", c.beta2, seen);
    take(j, "epsilon", c.epsilon, seen);
    take(j, "static_iterations", c.static_iterations, seen);
    take(j, "iterations", c.iterations, seen);
    take(j, "frames_per_iteration", c.frames_per_iteration, seen);
    take(j, "initial_horizon", c.initial_horizon, seen);
    take(j, "horizon_growth", c.horizon_growth, seen);
    take(j, "rk4_steps_per_frame", c.rk4_steps_per_frame, seen);
    take(j, "seed", c.seed, seen);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  reject_unknown(j, seen, "");
  c.validate();
  return c;
}

TrainConfig load_train_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return train_config_from_json(text);
}

// ---------------------------------------------------------------------------
// Model

PhysicsModel::PhysicsModel(const ModelConfig& config, const std::vector<Vec3>& points,
                           const std::vector<double>& volumes, std::uint64_t seed)
    : config_(config), volumes_(volumes) {
  const std::size_t n = points.size();
  if (n == 0 || volumes.size() != n) {
    throw std::invalid_argument("PhysicsModel: need one volume per point");
  }
  positions_ = Tensor({n, 3});
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) positions_.set(3 * i + k, points[i][k]);
  }
  Tensor rot({n, 4}), scale({n, 3}), opacity({n}), colors({n, 3});
  const double logit = std::log(config.initial_opacity / (1.0 - config.initial_opacity));
  for (std::size_t i = 0; i < n; ++i) {
    rot.set(4 * i, 1.0);
    const double s = std::log(config.initial_scale * std::cbrt(volumes[i]));
    for (int k = 0; k < 3; ++k) scale.set(3 * i + k, s);
    opacity.set(i, logit);
  }
  rotations_.value = rot;
  log_scales_.value = scale;
  opacity_logits_.value = opacity;
  colors_.value = colors;

  std::mt19937_64 rng(seed);
  velocity_ = VelocityField(config.velocity, rng);
  const auto d = static_cast<std::size_t>(config.velocity.code_dims);
  plain_velocity_ = Mlp("f_plain", d + encoded_width(1, config.velocity.time_frequencies), 3,
                        config.velocity.hidden_layers, config.velocity.width, rng);
  plain_velocity_.scale_output(config.velocity.neck_output_scale);
  code_net_ = Mlp("f_code", encoded_width(3, config.velocity.position_frequencies), d,
                  config.velocity.hidden_layers, config.velocity.width, rng);
  decoder_ = MaterialDecoder(config.material, rng);
  decoder_.network().scale_output(0.01);
  decoder_.set_default(config.initial_material);

  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor codes({n, d});
  for (double& v : codes.mutable_data()) v = normal(rng);
  free_codes_.value = codes;
  const auto raw = raw_from_material(config.initial_material);
  Tensor mat({n, 3});
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) mat.set(3 * i + k, raw[k]);
  }
  free_material_.value = mat;
}

GaussianTensors PhysicsModel::gaussians() const {
  return {positions_, rotations_.value, log_scales_.value, opacity_logits_.value,
          colors_.value};
}

Tensor PhysicsModel::codes() const {
  if (!config_.ipi) return free_codes_.value;
  if (config_.vfd) return velocity_.codes(positions_);
  return code_net_.forward(encode_position(positions_, config_.velocity.position_frequencies));
}

MaterialTensors PhysicsModel::materials() const {
  return config_.ipi ? decoder_.decode(positions_) : constrain_material(free_material_.value);
}

VelocityFn PhysicsModel::velocity_fn(const Tensor& codes) const {
  if (config_.vfd) {
    const Tensor h = velocity_.patterns(codes);
    const VelocityField* field = &velocity_;
    return [field, h](const Tensor& positions, double t) {
      return apply_basis(field->components_from_patterns(h, t), positions);
    };
  }
  const Mlp* net = &plain_velocity_;
  const int frequencies = config_.velocity.time_frequencies;
  return [net, codes, frequencies](const Tensor&, double t) {
    const std::size_t n = codes.dim(0);
    const Tensor time = encode_position(Tensor({1, 1}, {t}), frequencies);
    Tensor rows({n, time.size()});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < time.size(); ++k) rows.set(i * time.size() + k, time[k]);
    }
    return net->forward(concat_last({codes, rows}));
  };
}

Tensor PhysicsModel::initial_velocity(const Tensor& codes) const {
  return velocity_fn(codes)(positions_, 0.0);
}

std::shared_ptr<const ParticleBody> PhysicsModel::body() const {
  auto b = std::make_shared<ParticleBody>();
  b->volume = volumes_;
  b->mass.resize(volumes_.size());
  for (std::size_t i = 0; i < volumes_.size(); ++i) {
    b->mass[i] = config_.initial_material.density * volumes_[i];
  }
  return b;
}

ParameterRefs PhysicsModel::gaussian_parameters() {
  return {&rotations_, &log_scales_, &opacity_logits_, &colors_};
}

ParameterRefs PhysicsModel::physics_parameters() {
  ParameterRefs out;
  const auto append = [&out](const ParameterRefs& ps) {
    out.insert(out.end(), ps.begin(), ps.end());
  };
  if (config_.vfd) {
    if (config_.ipi) append(velocity_.code_net().parameters());
    append(velocity_.neck().parameters());
    append(velocity_.weight_net().parameters());
  } else {
    if (config_.ipi) append(code_net_.parameters());
    append(plain_velocity_.parameters());
  }
  if (!config_.ipi) out.push_back(&free_codes_);
  if (config_.mpm) {
    if (config_.ipi) {
      append(decoder_.network().parameters());
    } else {
      out.push_back(&free_material_);
    }
  }
  return out;
}

ParameterRefs PhysicsModel::parameters() {
  ParameterRefs out = gaussian_parameters();
  for (Parameter* p : physics_parameters()) out.push_back(p);
  return out;
}

ParameterRefs PhysicsModel::stored_parameters() {
  ParameterRefs out = gaussian_parameters();
  for (Parameter* p : velocity_.parameters()) out.push_back(p);
  for (Parameter* p : plain_velocity_.parameters()) out.push_back(p);
  for (Parameter* p : code_net_.parameters()) out.push_back(p);
  for (Parameter* p : decoder_.network().parameters()) out.push_back(p);
  out.push_back(&free_codes_);
  out.push_back(&free_material_);
  return out;
}

std::vector<const Parameter*> PhysicsModel::stored_parameters() const {
  const auto refs = const_cast<PhysicsModel*>(this)->stored_parameters();
  return {refs.begin(), refs.end()};
}

bool PhysicsModel::appearance(const Parameter* p) const {
  return p == &rotations_ || p == &log_scales_ || p == &opacity_logits_ || p == &colors_;
}

bool PhysicsModel::per_particle(const Parameter* p) const {
  return p == &free_codes_ || p == &free_material_;
}

Scene PhysicsModel::scene() const {
  Scene s;
  s.sh_degree = 0;
  s.bounds.lo = Vec3::Constant(-1e3);
  s.bounds.hi = Vec3::Constant(1e3);
  s.particles.resize(size());
  apply_tensors(gaussians(), s);
  for (std::size_t i = 0; i < size(); ++i) {
    s.particles[i].rest_volume = volumes_[i];
    s.particles[i].mass = config_.initial_material.density * volumes_[i];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Optimizer

void Adam::step(Parameter& p, const Tensor& grad, double lr) {
  Moments& s = state_[p.name];
  const std::size_t n = p.value.size();
  if (grad.size() != n) throw std::logic_error("Adam: gradient size mismatch for " + p.name);
  if (s.m.size() != n) {
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.steps = 0;
  }
  ++s.steps;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.steps));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.steps));
  std::vector<double> next(p.value.values());
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
    s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
    next[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + epsilon_);
  }
  p.value = Tensor(p.value.shape(), std::move(next));
}

TrainingDiverged::TrainingDiverged(int iteration, const std::string& pathway,
                                   const std::string& detail)
    : std::runtime_error("training diverged at iteration " + std::to_string(iteration) +
                         " in the " + pathway + " pathway: " + detail),
      iteration_(iteration),
      pathway_(pathway) {}

// ---------------------------------------------------------------------------
// Training

namespace {

bool finite(const Tensor& t) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double image_psnr(const Tensor& rendered, const Image& target) {
  return psnr(rendered.data(), std::span<const double>(target.rgb));
}

// Binds parameters to tape leaves and restores detached values on exit,
// even when the iteration throws.
class LeafBinding {
 public:
  LeafBinding(Tape& tape, const ParameterRefs& params) : params_(params) {
    for (Parameter* p : params_) p->value = tape.leaf(p->value);
  }
  ~LeafBinding() {
    for (Parameter* p : params_) p->value = p->value.detach();
  }
  LeafBinding(const LeafBinding&) = delete;
  LeafBinding& operator=(const LeafBinding&) = delete;

 private:
  ParameterRefs params_;
};

struct StepContext {
  Adam& adam;
  const PhysicsModel& model;
  const TrainConfig& config;
  std::map<std::string, bool>& active;
  double appearance_lr = 0.0;
};

void apply_gradients(StepContext& ctx, const ParameterRefs& params,
                     const GradientMap& grads) {
  for (Parameter* p : params) {
    // Tensors are copied out before the binding detaches them.
    const Tensor g = grads.grad(p->value);
    bool& seen = ctx.active[p->name];
    if (!seen) {
      for (double v : g.values()) {
        if (v != 0.0) {
          seen = true;
          break;
        }
      }
    }
    const double lr = ctx.model.appearance(p)     ? ctx.appearance_lr
                      : ctx.model.per_particle(p) ? ctx.config.gaussian_lr
                                                  : ctx.config.network_lr;
    const Tensor value = p->value.detach();
    Parameter detached{p->name, value};
    ctx.adam.step(detached, g, lr);
    p->value = detached.value;
  }
}

std::vector<int> sample_frames(int horizon, int count, std::mt19937_64& rng) {
  std::vector<int> all(static_cast<std::size_t>(horizon));
  std::iota(all.begin(), all.end(), 0);
  if (count == 0 || count >= horizon) return all;
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(count));
  // Partial Fisher-Yates with an explicit index draw keeps the sequence
  // independent of the standard library's sampling algorithm.
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(horizon - i));
    std::swap(all[i], all[j]);
    picked.push_back(all[i]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

int horizon_at(const TrainConfig& c, int train_frames, int k) {
  if (c.horizon_growth <= 0) return train_frames;
  const int start = std::min(c.initial_horizon, train_frames);
  const double grown =
      start + static_cast<double>(train_frames - start) * k / c.horizon_growth;
  return std::clamp(static_cast<int>(std::floor(grown)), std::min(2, train_frames),
                    train_frames);
}

// Positions (and deformation) at `frames` along each pathway.
struct Pathways {
  std::vector<Tensor> mpm_positions, mpm_deformation, vfd_positions;
};

Pathways run_pathways(const PhysicsModel& model, const Tensor& codes, const SimConfig& sim,
                      const std::vector<int>& frames, int rk4_steps, int iteration) {
  Pathways out;
  const int last = frames.empty() ? 0 : frames.back();
  const ModelConfig& mc = model.config();
  const Tensor& p0 = model.canonical_positions();
  if (mc.mpm) {
    const MaterialTensors m = model.materials();
    const auto [mu, lambda] = lame_tensors(m.youngs_modulus, m.poisson_ratio);
    const Tensor state = pack_state(p0, model.initial_velocity(codes));
    std::vector<Tensor> states;
    try {
      states = rollout(state, mu, lambda, model.body(), sim, last + 1);
    } catch (const std::exception& e) {
      throw TrainingDiverged(iteration, "mpm", e.what());
    }
    for (int f : frames) {
      out.mpm_positions.push_back(state_positions(states[f]));
      out.mpm_deformation.push_back(state_deformation(states[f]));
    }
  }
  if (mc.vfd) {
    const VelocityFn fn = model.velocity_fn(codes);
    Tensor pos = p0;
    std::size_t next = 0;
    for (int f = 0; f <= last; ++f) {
      if (f > 0) {
        pos = integrate_positions(fn, pos, (f - 1) * sim.frame_time(), f * sim.frame_time(),
                                  rk4_steps);
      }
      if (next < frames.size() && frames[next] == f) {
        out.vfd_positions.push_back(pos);
        ++next;
      }
    }
  }
  return out;
}

}  // namespace

TrainResult train(const Dataset& dataset, PhysicsModel& model, const TrainConfig& config,
                  const ProgressFn& progress) {
  config.validate();
  dataset.validate();
  if (model.size() != dataset.points.size()) {
    throw std::invalid_argument("train: model and dataset particle counts differ");
  }
  Adam adam(config.beta1, config.beta2, config.epsilon);
  std::mt19937_64 rng(config.seed);
  std::map<std::string, bool> active;
  StepContext ctx{adam, model, config, active};
  TrainResult result;
  const std::size_t cams = dataset.cameras.size();
  const auto record = [&](HistoryRow row) {
    result.history.push_back(row);
    if (progress) progress(row);
  };

  int iteration = 0;
  ctx.appearance_lr = config.gaussian_lr;
  for (int it = 0; it < config.static_iterations; ++it, ++iteration) {
    Tape tape;
    const ParameterRefs params = model.gaussian_parameters();
    LeafBinding binding(tape, params);
    const GaussianTensors g = model.gaussians();
    Tensor loss = Tensor::scalar(0.0);
    double score = 0.0;
    for (std::size_t c = 0; c < cams; ++c) {
      const Tensor image = render(g, 0, dataset.cameras[c]);
      loss = add(loss, rendering_loss(image, dataset.frames[c][0], config.lambda_ssim));
      score += image_psnr(image, dataset.frames[c][0]);
    }
    loss = scale(loss, 1.0 / static_cast<double>(cams));
    if (!finite(loss)) throw TrainingDiverged(iteration, "static", "non-finite loss");
    apply_gradients(ctx, params, tape.backward(loss));
    record({iteration, "static", loss.item(), score / static_cast<double>(cams)});
  }

  const bool dynamic = dataset.dynamic && config.iterations > 0;
  ctx.appearance_lr = config.dynamic_gaussian_lr;
  for (int k = 0; dynamic && k < config.iterations; ++k, ++iteration) {
    const int horizon = horizon_at(config, dataset.train_frame_count, k);
    const std::vector<int> frames = sample_frames(horizon, config.frames_per_iteration, rng);
    Tape tape;
    const ParameterRefs params =
        config.dynamic_gaussian_lr > 0.0 ? model.parameters() : model.physics_parameters();
    LeafBinding binding(tape, params);
    const Tensor codes = model.codes();
    const GaussianTensors g = model.gaussians();
    const Pathways paths =
        run_pathways(model, codes, dataset.sim, frames, config.rk4_steps_per_frame, iteration);

    const double views = static_cast<double>(frames.size() * cams);
    const bool mpm = model.config().mpm;
    const bool vfd = model.config().vfd;
    Tensor mpm_loss = Tensor::scalar(0.0), vfd_loss = Tensor::scalar(0.0),
           phys = Tensor::scalar(0.0);
    double score = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      for (std::size_t c = 0; c < cams; ++c) {
        const Image& target = dataset.frames[c][frames[i]];
        if (mpm) {
          const Tensor image = render(g, 0, dataset.cameras[c], &paths.mpm_positions[i],
                                      &paths.mpm_deformation[i]);
          mpm_loss = add(mpm_loss, rendering_loss(image, target, config.lambda_ssim));
          score += image_psnr(image, target);
        }
        if (vfd) {
          const Tensor image = render(g, 0, dataset.cameras[c], &paths.vfd_positions[i]);
          vfd_loss = add(vfd_loss, rendering_loss(image, target, config.lambda_ssim));
          if (!mpm) score += image_psnr(image, target);
        }
      }
      if (mpm && vfd) {
        phys = add(phys, mean(square(sub(paths.mpm_positions[i], paths.vfd_positions[i]))));
      }
    }
    mpm_loss = scale(mpm_loss, 1.0 / views);
    vfd_loss = scale(vfd_loss, 1.0 / views);
    phys = scale(phys, config.lambda_phys / static_cast<double>(frames.size()));
    if (!finite(mpm_loss)) throw TrainingDiverged(iteration, "mpm", "non-finite loss");
    if (!finite(vfd_loss)) throw TrainingDiverged(iteration, "vfd", "non-finite loss");
    if (!finite(phys)) throw TrainingDiverged(iteration, "consistency", "non-finite loss");
    const Tensor loss = add(add(mpm_loss, vfd_loss), phys);
    apply_gradients(ctx, params, tape.backward(loss));
    record({iteration, "dynamic", loss.item(), score / views});
  }

  for (const Parameter* p : model.parameters()) {
    if (!active[p->name]) result.dead_parameters.push_back(p->name);
  }
  return result;
}

Trajectory predict(const PhysicsModel& model, const SimConfig& sim, int frames,
                   int rk4_steps_per_frame) {
  std::vector<int> all(static_cast<std::size_t>(frames));
  std::iota(all.begin(), all.end(), 0);
  const Pathways paths = run_pathways(model, model.codes(), sim, all, rk4_steps_per_frame, -1);
  Trajectory t;
  if (model.config().mpm) {
    t.positions = paths.mpm_positions;
    t.deformation = paths.mpm_deformation;
  } else {
    t.positions = paths.vfd_positions;
  }
  return t;
}

Extrapolation extrapolate(const PhysicsModel& model, const Dataset& dataset, int horizon,
                          int rk4_steps_per_frame) {
  dataset.validate();
  const int held = horizon < 0 ? dataset.extrapolate_frame_count
                               : std::min(horizon, dataset.extrapolate_frame_count);
  const int first = dataset.train_frame_count;
  const int end = first + held;
  Trajectory traj;
  if (dataset.dynamic) {
    traj = predict(model, dataset.sim, end, rk4_steps_per_frame);
  } else {
    traj.positions.assign(static_cast<std::size_t>(end), model.canonical_positions());
  }
  const GaussianTensors g = model.gaussians();
  Extrapolation out;
  out.images.assign(dataset.cameras.size(), {});
  for (int f = first; f < end; ++f) {
    FrameMetrics m;
    m.frame = f;
    for (std::size_t c = 0; c < dataset.cameras.size(); ++c) {
      const Tensor* def = traj.deformation.empty() ? nullptr : &traj.deformation[f];
      const Image image = Image::from_tensor(
          render(g, 0, dataset.cameras[c], &traj.positions[f], def));
      m.psnr += psnr(image, dataset.frames[c][f]);
      m.ssim += ssim(image, dataset.frames[c][f]);
      out.images[c].push_back(image);
    }
    m.psnr /= static_cast<double>(dataset.cameras.size());
    m.ssim /= static_cast<double>(dataset.cameras.size());
    out.mean_psnr += m.psnr;
    out.mean_ssim += m.ssim;
    out.frames.push_back(m);
  }
  if (held > 0) {
    out.mean_psnr /= held;
    out.mean_ssim /= held;
  }
  return out;
}

std::vector<std::vector<double>> physics_signature(const PhysicsModel& model,
                                                   const std::vector<double>& timestamps) {
  const std::size_t n = model.size();
  const Tensor codes = model.codes();
  const MaterialTensors m = model.materials();
  const VelocityFn fn = model.velocity_fn(codes);
  std::vector<std::vector<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {m.youngs_modulus[i], m.poisson_ratio[i], model.config().initial_material.density};
  }
  for (double t : timestamps) {
    const Tensor v = fn(model.canonical_positions(), t);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) out[i].push_back(v[3 * i + k]);
    }
  }
  return out;
}

std::vector<double> signature_timestamps(const Dataset& dataset) {
  return uniform_timestamps(0.0, dataset.frame_time(dataset.train_frame_count - 1),
                            kSignatureTimestamps);
}

KMeansResult segment_particles(const PhysicsModel& model, const Dataset& dataset,
                               int clusters, std::uint64_t seed) {
  return kmeans(standardize(physics_signature(model, signature_timestamps(dataset))),
                clusters, seed);
}

// ---------------------------------------------------------------------------
// Files

void save_checkpoint(const fs::path& path, const PhysicsModel& model) {
  json j;
  j["format"] = "splatphys-checkpoint";
  j["version"] = 1;
  j["model"] = model_json(model.config());
  json points = json::array();
  const Tensor& p = model.canonical_positions();
  for (std::size_t i = 0; i < model.size(); ++i) {
    points.push_back({p[3 * i], p[3 * i + 1], p[3 * i + 2]});
  }
  j["points"] = points;
  j["volumes"] = model.volumes();
  json params = json::object();
  for (const Parameter* q : model.stored_parameters()) {
    params[q->name] = {{"shape", q->value.shape()}, {"values", q->value.values()}};
  }
  j["parameters"] = params;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PhysicsModel load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != "splatphys-checkpoint") {
      throw std::runtime_error("not a checkpoint");
    }
    std::vector<Vec3> points;
    for (const auto& q : j.at("points")) {
      points.emplace_back(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>());
    }
    PhysicsModel model(model_from_json(j.at("model")), points,
                       j.at("volumes").get<std::vector<double>>(), 0);
    const json& params = j.at("parameters");
    for (Parameter* q : model.stored_parameters()) {
      const json& entry = params.at(q->name);
      const Shape shape = entry.at("shape").get<Shape>();
      if (shape != q->value.shape()) {
        throw std::runtime_error("parameter " + q->name + " has shape " + shape_string(shape) +
                                 ", expected " + shape_string(q->value.shape()));
      }
      q->value = Tensor(shape, entry.at("values").get<std::vector<double>>());
    }
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_history_csv(const fs::path& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "iteration,stage,loss,psnr\n";
  for (const auto& r : history) {
    out << r.iteration << ',' << r.stage << ',' << r.loss << ',' << r.psnr << '\n';
  }
}

}  // namespace splatphys
