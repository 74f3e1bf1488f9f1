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

// Microbenchmarks for the hot paths: rasterization, its backward pass, the
// MPM substep and SSIM.

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "splatphys/material_model.hpp"
#include "splatphys/metrics.hpp"
#include "splatphys/mpm.hpp"
#include "splatphys/ops.hpp"
#include "splatphys/selftest.hpp"
#include "splatphys/splat_renderer.hpp"

namespace splatphys {
namespace {

void BM_RenderTiled(benchmark::State& state) {
  const Scene scene = random_scene(1, static_cast<int>(state.range(0)));
  const Camera cam = front_camera(64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(render(scene, cam));
}
BENCHMARK(BM_RenderTiled)->Arg(64)->Arg(512);

void BM_RenderBruteForce(benchmark::State& state) {
  const Scene scene = random_scene(1, static_cast<int>(state.range(0)));
  const Camera cam = front_camera(64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(render_bruteforce(scene, cam));
}
BENCHMARK(BM_RenderBruteForce)->Arg(64)->Arg(512);

void BM_RenderBackward(benchmark::State& state) {
  const Scene scene = random_scene(1, static_cast<int>(state.range(0)));
  const Camera cam = front_camera(64, 64);
  const GaussianTensors g = scene_tensors(scene);
  for (auto _ : state) {
    Tape tape;
    const GaussianTensors t{tape.leaf(g.positions), tape.leaf(g.rotations),
                            tape.leaf(g.log_scales), tape.leaf(g.opacity_logits),
                            tape.leaf(g.colors)};
    benchmark::DoNotOptimize(tape.backward(mean(render(t, 0, cam))));
  }
}
BENCHMARK(BM_RenderBackward)->Arg(64)->Arg(512);

struct Cube {
  ParticleState state;
  std::shared_ptr<ParticleBody> body = std::make_shared<ParticleBody>();
  std::vector<double> mu, lambda;
};

Cube cube(int per_axis) {
  Cube c;
  const double side = 0.25, spacing = side / per_axis, volume = spacing * spacing * spacing;
  const Lame lame = lame_from_material({});
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < per_axis; ++k) {
        c.state.positions.push_back(Vec3::Constant(0.375) + (Vec3(i, j, k) + Vec3::Constant(0.5)) * spacing);
        c.state.velocities.push_back(Vec3(0.3, 0.2, 0.0));
        c.state.deformation.push_back(Mat3::Identity());
        c.body->mass.push_back(1000.0 * volume);
        c.body->volume.push_back(volume);
        c.mu.push_back(lame.mu);
        c.lambda.push_back(lame.lambda);
      }
  return c;
}

void BM_MpmSubstep(benchmark::State& state) {
  const Cube c = cube(static_cast<int>(state.range(0)));
  const SimConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(substep(c.state, *c.body, c.mu, c.lambda, config));
  }
  state.SetItemsProcessed(state.iterations() * c.state.size());
}
BENCHMARK(BM_MpmSubstep)->Arg(4)->Arg(8);

void BM_MpmSubstepBackward(benchmark::State& state) {
  const Cube c = cube(static_cast<int>(state.range(0)));
  const SimConfig config;
  const Tensor s0 = state_tensor(c.state);
  const Tensor mu = Tensor::vector(c.mu), lambda = Tensor::vector(c.lambda);
  for (auto _ : state) {
    Tape tape;
    Tensor s = tape.leaf(s0);
    for (int k = 0; k < 10; ++k) s = substep(s, mu, lambda, c.body, config, k);
    benchmark::DoNotOptimize(tape.backward(mean(state_positions(s))));
  }
}
BENCHMARK(BM_MpmSubstepBackward)->Arg(4)->Arg(8);

void BM_Ssim(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  Image a(64, 64), b(64, 64);
  for (double& v : a.rgb) v = u(rng);
  for (double& v : b.rgb) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

void BM_SsimBackward(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  Image a(64, 64), b(64, 64);
  for (double& v : a.rgb) v = u(rng);
  for (double& v : b.rgb) v = u(rng);
  const Tensor pred = a.to_tensor();
  for (auto _ : state) {
    Tape tape;
    const Tensor x = tape.leaf(pred);
    benchmark::DoNotOptimize(tape.backward(rendering_loss(x, b, 0.2)));
  }
}
BENCHMARK(BM_SsimBackward);

}  // namespace
}  // namespace splatphys

BENCHMARK_MAIN();
