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

#include "splatphys/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <random>
#include <utility>

#include "splatphys/dataset.hpp"
#include "splatphys/gradcheck.hpp"
#include "splatphys/material_model.hpp"
#include "splatphys/metrics.hpp"
#include "splatphys/mpm.hpp"
#include "splatphys/nn.hpp"
#include "splatphys/ops.hpp"
#include "splatphys/splat_renderer.hpp"
#include "splatphys/trainer.hpp"
#include "splatphys/velocity_field.hpp"

namespace splatphys {
namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = u(rng);
  return t;
}

PropertyResult make_result(std::string name, double measured, double tolerance,
                           std::string detail = {}) {
  PropertyResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.tolerance = tolerance;
  r.passed = std::isfinite(measured) && measured < tolerance;
  r.detail = std::move(detail);
  return r;
}

// Lattice block of particles with uniform velocity and material.
struct Block {
  ParticleState state;
  std::shared_ptr<ParticleBody> body = std::make_shared<ParticleBody>();
  std::vector<double> mu, lambda;
  double total_mass() const {
    return std::accumulate(body->mass.begin(), body->mass.end(), 0.0);
  }
};

Block make_block(const Vec3& center, double side, int per_axis, const Vec3& velocity,
                 const MaterialParams& material) {
  Block b;
  const double spacing = side / per_axis;
  const double volume = spacing * spacing * spacing;
  const Lame lame = lame_from_material(material);
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < per_axis; ++k) {
        b.state.positions.push_back(center + (Vec3(i, j, k) + Vec3::Constant(0.5)) * spacing -
                                    Vec3::Constant(0.5 * side));
        b.state.velocities.push_back(velocity);
        b.state.deformation.push_back(Mat3::Identity());
        b.body->mass.push_back(material.density * volume);
        b.body->volume.push_back(volume);
        b.mu.push_back(lame.mu);
        b.lambda.push_back(lame.lambda);
      }
  return b;
}

struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  double lo, hi;
  ScalarFn fn;
};

const Tensor& identity3() {
  static const Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  return eye;
}

// I + 0.3 X keeps det F > 0 for X in [-1, 1]^9.
Tensor near_identity(const Tensor& x) {
  return add(scale(x, 0.3), x.rank() == 2 && x.dim(1) == 9
                                ? identity3().reshaped({9})
                                : identity3());
}

std::vector<OpCase> op_cases() {
  static const Image ssim_target = [] {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 1);
    Image img(12, 12);
    for (double& v : img.rgb) v = u(rng);
    return img;
  }();
  static const auto substep_body = [] {
    auto body = std::make_shared<ParticleBody>();
    for (int p = 0; p < 8; ++p) {
      body->mass.push_back(0.2);
      body->volume.push_back(2e-4);
    }
    return body;
  }();
  static const Camera sh_camera_origin = front_camera(4, 4);

  return {
      {"add", {{3, 4}, {4}}, -1, 1, [](const auto& in) { return add(in[0], in[1]); }},
      {"sub", {{3, 1}, {3, 4}}, -1, 1, [](const auto& in) { return sub(in[0], in[1]); }},
      {"mul", {{2, 3}, {2, 3}}, -1, 1, [](const auto& in) { return mul(in[0], in[1]); }},
      {"div", {{2, 3}, {3}}, 0.5, 1.5, [](const auto& in) { return div(in[0], in[1]); }},
      {"neg", {{4}}, -1, 1, [](const auto& in) { return neg(in[0]); }},
      {"scale", {{4}}, -1, 1, [](const auto& in) { return scale(in[0], -2.5); }},
      {"add_scalar", {{4}}, -1, 1, [](const auto& in) { return add_scalar(in[0], 0.3); }},
      {"exp", {{5}}, -1, 1, [](const auto& in) { return exp(in[0]); }},
      {"log", {{5}}, 0.5, 1.5, [](const auto& in) { return log(in[0]); }},
      {"sqrt", {{5}}, 0.5, 1.5, [](const auto& in) { return sqrt(in[0]); }},
      {"square", {{5}}, -1, 1, [](const auto& in) { return square(in[0]); }},
      {"abs", {{5}}, -1, 1, [](const auto& in) { return abs(in[0]); }},
      {"sin", {{5}}, -1, 1, [](const auto& in) { return sin(in[0]); }},
      {"cos", {{5}}, -1, 1, [](const auto& in) { return cos(in[0]); }},
      {"tanh", {{5}}, -1, 1, [](const auto& in) { return tanh(in[0]); }},
      {"sigmoid", {{5}}, -1, 1, [](const auto& in) { return sigmoid(in[0]); }},
      {"softplus", {{5}}, -1, 1, [](const auto& in) { return softplus(in[0]); }},
      {"sum", {{2, 3}}, -1, 1, [](const auto& in) { return sum(in[0]); }},
      {"mean", {{2, 3}}, -1, 1, [](const auto& in) { return mean(in[0]); }},
      {"sum_axis", {{2, 3, 4}}, -1, 1, [](const auto& in) { return sum(in[0], 1); }},
      {"matmul", {{3, 4}, {4, 2}}, -1, 1, [](const auto& in) { return matmul(in[0], in[1]); }},
      {"matmul_batched", {{2, 3, 3}, {2, 3, 3}}, -1, 1,
       [](const auto& in) { return matmul(in[0], in[1]); }},
      {"transpose", {{2, 3, 4}}, -1, 1, [](const auto& in) { return transpose(in[0]); }},
      {"reshape", {{2, 6}}, -1, 1, [](const auto& in) { return reshape(in[0], {3, 4}); }},
      {"slice_last", {{3, 5}}, -1, 1, [](const auto& in) { return slice_last(in[0], 1, 4); }},
      {"concat_last", {{3, 2}, {3, 1}}, -1, 1,
       [](const auto& in) { return concat_last({in[0], in[1]}); }},
      {"gather_rows", {{4, 2}}, -1, 1,
       [](const auto& in) { return gather_rows(in[0], {3, 0, 3}); }},
      {"scatter_add_rows", {{4, 2}, {3, 2}}, -1, 1,
       [](const auto& in) { return scatter_add_rows(in[0], {1, 1, 2}, in[1]); }},
      {"cross_rows", {{3, 3}, {3, 3}}, -1, 1,
       [](const auto& in) { return cross_rows(in[0], in[1]); }},
      {"polar_rotation", {{2, 3, 3}}, -1, 1,
       [](const auto& in) { return polar_decompose(near_identity(in[0])).first; }},
      {"polar_stretch", {{2, 3, 3}}, -1, 1,
       [](const auto& in) { return polar_decompose(near_identity(in[0])).second; }},
      {"encode_position", {{2, 3}}, -1, 1,
       [](const auto& in) { return encode_position(in[0], 3); }},
      {"apply_basis", {{3, 6}, {3, 3}}, -1, 1,
       [](const auto& in) { return apply_basis(in[0], in[1]); }},
      {"covariance", {{3, 4}, {3, 3}}, 0.5, 1.5,
       [](const auto& in) { return covariance_tensor(in[0], in[1]); }},
      {"sh_colors", {{3, 12}, {3, 3}}, -1, 1,
       [](const auto& in) {
         return sh_colors(in[0], in[1], sh_camera_origin.center(), 1);
       }},
      {"stress", {{3, 9}, {3}, {3}}, -1, 1,
       [](const auto& in) {
         return stress_tensor(near_identity(in[0]), add_scalar(in[1], 2.0),
                              add_scalar(in[2], 2.0));
       }},
      {"lame", {{4}, {4}}, -1, 1,
       [](const auto& in) {
         const auto [mu, lambda] =
             lame_tensors(add_scalar(in[0], 2.0), add_scalar(scale(in[1], 0.2), 0.2));
         return concat_last({mu, lambda});
       }},
      {"constrain_material", {{3, 3}}, -2, 2,
       [](const auto& in) {
         const MaterialTensors m = constrain_material(in[0]);
         return concat_last({scale(m.youngs_modulus, 1e-4), m.poisson_ratio,
                             scale(m.density, 1e-3)});
       }},
      {"ssim", {{12, 12, 3}}, 0, 1,
       [](const auto& in) { return reshape(ssim_tensor(in[0], ssim_target), {1}); }},
      {"mpm_substep", {{8, 15}, {8}, {8}}, -1, 1,
       [](const auto& in) {
         SimConfig c;
         c.dt = 1e-3;
         // Particles in a small cluster near the grid centre with F near I.
         const Tensor x = add_scalar(scale(slice_last(in[0], 0, 3), 0.02), 0.5);
         const Tensor v = scale(slice_last(in[0], 3, 6), 0.3);
         const Tensor f = near_identity(scale(slice_last(in[0], 6, 15), 0.2));
         const Tensor s = concat_last({x, v, f});
         const Tensor out = substep(s, add_scalar(scale(in[1], 500.0), 2000.0),
                                    add_scalar(scale(in[2], 500.0), 2000.0),
                                    substep_body, c);
         return out;
       }},
  };
}

}  // namespace

std::string format_result(const PropertyResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s %s measured=%.6e tolerance=%.1e",
                r.passed ? "PASS" : "FAIL", r.name.c_str(), r.measured, r.tolerance);
  std::string line = buf;
  if (!r.detail.empty()) line += " (" + r.detail + ")";
  return line;
}

Scene random_scene(std::uint64_t seed, int count, int sh_degree) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n;
  Scene scene;
  scene.sh_degree = sh_degree;
  scene.bounds = {Vec3::Constant(-0.5), Vec3::Constant(0.5)};
  for (int i = 0; i < count; ++i) {
    GaussianParticle g;
    g.position = 0.45 * Vec3(u(rng), u(rng), u(rng));
    g.rotation = Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
    g.log_scale = Vec3::Constant(std::log(0.06)) + 0.5 * Vec3(u(rng), u(rng), u(rng));
    g.opacity_logit = 2.0 * u(rng);
    g.color.assign(3 * sh_coeffs_per_channel(sh_degree), 0.0);
    for (double& c : g.color) c = 2.0 * u(rng);
    scene.particles.push_back(g);
  }
  return scene;
}

Camera front_camera(int width, int height) {
  return Camera::look_at(Vec3(0.3, -0.4, -3.0), Vec3::Zero(), Vec3::UnitY(), 0.45,
                         width, height);
}

PropertyResult check_primitive_gradients(int trials) {
  double worst = 0.0;
  std::string worst_op = "none";
  for (const OpCase& c : op_cases()) {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < trials; ++trial) {
      std::vector<Tensor> inputs;
      for (const Shape& s : c.shapes) inputs.push_back(random_tensor(rng, s, c.lo, c.hi));
      // Contract with random weights so every output element matters.
      const Tensor weights = random_tensor(rng, c.fn(inputs).shape());
      const ScalarFn loss = [&](const std::vector<Tensor>& in) {
        return sum(mul(c.fn(in), weights));
      };
      const double err = check_gradients(loss, inputs).relative_error;
      if (!(err <= worst)) {
        worst = err;
        worst_op = c.name;
      }
    }
  }
  return make_result("autodiff.primitive_gradients", worst, 1e-6, "worst op " + worst_op);
}

PropertyResult check_render_equivalence(int scenes) {
  const Camera cam = front_camera(64, 64);
  double worst = 0.0;
  for (int seed = 0; seed < scenes; ++seed) {
    const Scene scene = random_scene(100 + seed, 1 + (seed * 7) % 64, seed % 2);
    const Image a = render(scene, cam);
    const Image b = render_bruteforce(scene, cam);
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
      worst = std::max(worst, std::abs(a.rgb[i] - b.rgb[i]));
    }
  }
  return make_result("renderer.tiled_matches_bruteforce", worst, 1e-9);
}

PropertyResult check_render_gradients(int scenes) {
  const Camera cam = front_camera(20, 20);
  double worst = 0.0;
  for (int seed = 0; seed < scenes; ++seed) {
    const int degree = seed % 2;
    Scene scene = random_scene(300 + seed, 6, degree);
    for (auto& p : scene.particles) p.log_scale.array() += 0.6;
    const GaussianTensors g = scene_tensors(scene);
    std::mt19937_64 rng(seed);
    const Tensor weights = random_tensor(rng, {20, 20, 3}, 0.0, 1.0);
    const ScalarFn loss = [&](const std::vector<Tensor>& in) {
      const GaussianTensors t{in[0], in[1], in[2], in[3], in[4]};
      return sum(mul(render(t, degree, cam), weights));
    };
    worst = std::max(
        worst, check_gradients(loss, {g.positions, g.rotations, g.log_scales,
                                      g.opacity_logits, g.colors},
                               1e-6)
                   .relative_error);
  }
  return make_result("renderer.gradients", worst, 1e-4);
}

PropertyResult check_divergence_free(int samples) {
  VelocityFieldConfig config;
  config.motion_patterns = 4;
  config.code_dims = 8;
  config.width = 16;
  config.hidden_layers = 2;
  config.neck_output_scale = 1.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  const double h = 1e-4;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    VelocityField field(config, rng);
    const Tensor z = field.codes(Tensor({1, 3}, {u(rng), u(rng), u(rng)}));
    const double t = u(rng) + 1.0;
    const Vec3 p(u(rng), u(rng), u(rng));
    double div = 0.0;
    for (int a = 0; a < 3; ++a) {
      Vec3 pp = p, pm = p;
      pp[a] += h;
      pm[a] -= h;
      const Tensor vp = field.velocity(z, t, Tensor({1, 3}, {pp.x(), pp.y(), pp.z()}));
      const Tensor vm = field.velocity(z, t, Tensor({1, 3}, {pm.x(), pm.y(), pm.z()}));
      div += (vp[a] - vm[a]) / (2 * h);
    }
    worst = std::max(worst, std::abs(div));
  }
  return make_result("velocity.divergence_free", worst, 1e-6);
}

namespace {

// A stiff block with random internal velocities, far from every wall.
Block conservation_block() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  Block b = make_block(Vec3(0.5, 0.5, 0.5), 0.2, 4, Vec3::Zero(), {1e4, 0.3, 1000});
  for (auto& v : b.state.velocities) v = Vec3(u(rng), u(rng), u(rng));
  return b;
}

SimConfig zero_gravity() {
  SimConfig c;
  c.gravity = Vec3::Zero();
  return c;
}

}  // namespace

PropertyResult check_mass_conservation(int substeps) {
  const SimConfig c = zero_gravity();
  Block b = conservation_block();
  const double mass = b.total_mass();
  ParticleState s = b.state;
  double worst = 0.0;
  for (int k = 0; k < substeps; ++k) {
    worst = std::max(worst, std::abs(p2g(s, *b.body, c).total_mass() - mass));
    s = substep(s, *b.body, b.mu, b.lambda, c);
  }
  return make_result("mpm.mass_conservation", worst, 1e-12);
}

PropertyResult check_momentum_conservation(int substeps) {
  const SimConfig c = zero_gravity();
  Block b = conservation_block();
  ParticleState s = b.state;
  Vec3 q = total_momentum(s, *b.body);
  double worst = 0.0;
  const double wall = (c.boundary + 2) * c.cell_width;
  for (int k = 0; k < substeps; ++k) {
    s = substep(s, *b.body, b.mu, b.lambda, c);
    for (const Vec3& x : s.positions) {
      if (x.minCoeff() < wall || x.maxCoeff() > 1.0 - wall) {
        return make_result("mpm.momentum_conservation", INFINITY, 1e-8,
                           "block reached the boundary at substep " + std::to_string(k));
      }
    }
    const Vec3 q1 = total_momentum(s, *b.body);
    worst = std::max(worst, (q1 - q).cwiseAbs().maxCoeff());
    q = q1;
  }
  return make_result("mpm.momentum_conservation", worst, 1e-8);
}

PropertyResult check_ballistic() {
  const SimConfig c;
  const Vec3 v0(0.3, 0.5, -0.2);
  Block b = make_block(Vec3(0.45, 0.6, 0.55), 0.15, 3, v0, {1e4, 0.2, 1000});
  const Vec3 p0 = center_of_mass(b.state, *b.body);
  const int steps = static_cast<int>(std::lround(0.3 / c.dt));
  const double t = steps * c.dt;
  ParticleState s = b.state;
  for (int k = 0; k < steps; ++k) s = substep(s, *b.body, b.mu, b.lambda, c);
  const Vec3 expected = p0 + v0 * t + 0.5 * c.gravity * t * t;
  const double rel = (center_of_mass(s, *b.body) - expected).norm() / expected.norm();
  return make_result("mpm.ballistic", rel, 1e-3);
}

PropertyResult check_launch_gradient() {
  const SimConfig c;
  const int steps = 50;
  const Block b = make_block(Vec3(0.5, 0.5, 0.5), 0.15, 3, Vec3::Zero(), {1e4, 0.2, 1000});
  const std::size_t n = b.state.size();
  Tensor positions({n, 3});
  for (std::size_t p = 0; p < n; ++p)
    for (int k = 0; k < 3; ++k) positions.set(3 * p + k, b.state.positions[p][k]);
  Tape tape;
  const Tensor v0 = tape.leaf(Tensor::vector({0.2, 0.4, -0.1}));
  Tensor s = pack_state(positions, add(Tensor::zeros({n, 3}), v0));
  const Tensor mu = Tensor::vector(b.mu), lambda = Tensor::vector(b.lambda);
  for (int k = 0; k < steps; ++k) s = substep(s, mu, lambda, b.body, c, k);
  const Tensor height = mean(slice_last(state_positions(s), 1, 2));
  const double grad = tape.backward(height).grad(v0)[1];
  // Symplectic Euler: y_N = y_0 + N dt v0y + gravity terms.
  const double analytic = steps * c.dt;
  return make_result("mpm.launch_height_gradient", std::abs(grad - analytic) / analytic,
                     1e-6);
}

PropertyResult check_modulus_gradient() {
  SimConfig c;
  c.gravity = Vec3::Zero();
  c.dt = 5e-4;
  Block b = make_block(Vec3(0.5, 0.5, 0.5), 0.2, 3, Vec3::Zero(), {1e4, 0.3, 1000});
  for (auto& f : b.state.deformation) f = Vec3(0.9, 1.0, 1.05).asDiagonal();
  const Tensor state = state_tensor(b.state);
  const std::size_t n = b.state.size();
  std::mt19937_64 rng(11);
  const Tensor weights = random_tensor(rng, {n, 15});
  // E in units of 1e4 keeps the finite-difference step well scaled.
  const ScalarFn loss = [&](const std::vector<Tensor>& in) {
    const Tensor youngs = scale(add(Tensor::zeros({n}), in[0]), 1e4);
    const auto [mu, lambda] = lame_tensors(youngs, Tensor({n}, 0.3));
    Tensor s = state;
    for (int k = 0; k < 20; ++k) s = substep(s, mu, lambda, b.body, c, k);
    return sum(mul(s, weights));
  };
  const GradCheckResult r = check_gradients(loss, {Tensor::vector({1.0})}, 1e-5);
  char detail[64];
  std::snprintf(detail, sizeof(detail), "dL/dE=%.6e", r.analytic[0][0] * 1e-4);
  return make_result("mpm.modulus_gradient", r.relative_error, 1e-3, detail);
}

PropertyResult check_metric_properties() {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0.0;
  std::string broken;
  auto expect = [&](bool ok, double err, const char* what) {
    worst = std::max(worst, ok ? err : 1.0);
    if (!ok && broken.empty()) broken = what;
  };
  Image a(16, 16), b(16, 16);
  for (double& v : a.rgb) v = u(rng);
  for (double& v : b.rgb) v = u(rng);
  expect(psnr(a, a) == kPsnrCap, 0.0, "psnr cap");
  expect(true, std::abs(psnr(a, b) - psnr(b, a)), "psnr symmetry");
  expect(true, std::abs(ssim(a, a) - 1.0), "ssim identity");
  expect(true, std::abs(ssim(a, b) - ssim(b, a)), "ssim symmetry");
  expect(ssim(a, b) < 1.0, 0.0, "ssim distortion");

  std::vector<std::vector<double>> points;
  std::vector<int> truth;
  std::normal_distribution<double> n(0, 0.05);
  for (int i = 0; i < 60; ++i) {
    const int cls = i % 3;
    points.push_back({cls + n(rng), 2.0 * cls + n(rng)});
    truth.push_back(cls);
  }
  const KMeansResult km = kmeans(points, 3, 0);  // throws if inertia rises
  const SegmentationScores s = segmentation_scores(km.labels, truth);
  expect(true, 1.0 - s.miou, "kmeans blobs");
  std::vector<int> relabeled = truth;
  for (int& l : relabeled) l = (l + 1) % 3 + 7;
  const SegmentationScores p = segmentation_scores(relabeled, truth);
  expect(true, std::max(1.0 - p.miou, 1.0 - p.f1), "relabeling invariance");
  return make_result("metrics.properties", worst, 1e-12, broken);
}

PropertyResult check_protocol() {
  std::string broken;
  for (RecipeKind kind : {RecipeKind::kStatic, RecipeKind::kTranslatingCube,
                          RecipeKind::kFallingElasticCube, RecipeKind::kTwoMaterials,
                          RecipeKind::kRotatingBody}) {
    const SceneRecipe r = default_recipe(kind);
    if (r.frames != 89 || r.train_frames != 67 || r.frames - r.train_frames != 22) {
      broken = to_string(kind) + " split";
    }
  }
  Dataset d;
  d.sim = default_recipe(RecipeKind::kFallingElasticCube).sim;
  d.train_frame_count = 67;
  d.extrapolate_frame_count = 22;
  const std::vector<double> ts = signature_timestamps(d);
  double spacing_error = 0.0;
  if (ts.size() != 10 || ts.front() != 0.0 || ts.back() != d.frame_time(66)) {
    broken = "signature timestamps";
  } else {
    const double step = d.frame_time(66) / 9.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      spacing_error = std::max(spacing_error, std::abs(ts[i] - i * step));
    }
  }
  return make_result("protocol.split_and_timestamps", broken.empty() ? spacing_error : 1.0,
                     1e-12, broken);
}

std::vector<NamedCheck> selftest_checks() {
  return {
      {"autodiff.primitive_gradients", [] { return check_primitive_gradients(); }},
      {"renderer.tiled_matches_bruteforce", [] { return check_render_equivalence(); }},
      {"renderer.gradients", [] { return check_render_gradients(); }},
      {"velocity.divergence_free", [] { return check_divergence_free(); }},
      {"mpm.mass_conservation", [] { return check_mass_conservation(); }},
      {"mpm.momentum_conservation", [] { return check_momentum_conservation(); }},
      {"mpm.ballistic", check_ballistic},
      {"mpm.launch_height_gradient", check_launch_gradient},
      {"mpm.modulus_gradient", check_modulus_gradient},
      {"metrics.properties", check_metric_properties},
      {"protocol.split_and_timestamps", check_protocol},
  };
}

bool run_selftest(const std::function<void(const std::string&)>& out) {
  bool ok = true;
  for (const NamedCheck& check : selftest_checks()) {
    PropertyResult r;
    try {
      r = check.run();
    } catch (const std::exception& e) {
      r = make_result(check.name, INFINITY, 0.0, e.what());
    }
    ok = ok && r.passed;
    out(format_result(r));
  }
  return ok;
}

}  // namespace splatphys
