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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "splatphys/metrics.hpp"
#include "splatphys/ops.hpp"

namespace splatphys {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("splatphys_trainer_" + name);
  fs::remove_all(p);
  return p;
}

Dataset small_dataset(RecipeKind kind, int frames = 8, int train = 6) {
  SceneRecipe r = default_recipe(kind);
  r.frames = frames;
  r.train_frames = train;
  r.width = r.height = 24;
  r.cameras = 2;
  return generate_dataset(r, 0);
}

TrainConfig quick_config() {
  TrainConfig c;
  c.static_iterations = 3;
  c.iterations = 3;
  c.frames_per_iteration = 3;
  c.initial_horizon = 3;
  c.horizon_growth = 2;
  c.model.velocity.motion_patterns = 4;
  c.model.velocity.code_dims = 8;
  c.model.velocity.width = 16;
  c.model.velocity.hidden_layers = 2;
  c.model.material.width = 16;
  c.model.material.hidden_layers = 2;
  return c;
}

TEST(TrainConfigTest, JsonRoundTrip) {
  TrainConfig c = quick_config();
  c.model.ipi = false;
  c.lambda_phys = 0.25;
  c.seed = 1234567890123ULL;
  c.model.initial_material.youngs_modulus = 3000.0;
  const TrainConfig back = train_config_from_json(train_config_to_json(c));
  EXPECT_EQ(train_config_to_json(back), train_config_to_json(c));
  EXPECT_FALSE(back.model.ipi);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(TrainConfigTest, MissingKeysKeepDefaults) {
  const TrainConfig c = train_config_from_json("{\"iterations\": 7}");
  EXPECT_EQ(c.iterations, 7);
  EXPECT_EQ(c.lambda_ssim, 0.2);
  EXPECT_EQ(c.lambda_phys, 0.1);
  EXPECT_EQ(c.network_lr, 1e-3);
  EXPECT_EQ(c.gaussian_lr, 1e-2);
}

TEST(TrainConfigTest, RejectsBadInput) {
  EXPECT_THROW(train_config_from_json("{\"iteratons\": 7}"), std::invalid_argument);
  EXPECT_THROW(train_config_from_json("{\"model\": {\"mmp\": true}}"), std::invalid_argument);
  EXPECT_THROW(train_config_from_json("{\"model\": {\"mpm\": false, \"vfd\": false}}"),
               std::invalid_argument);
  EXPECT_THROW(train_config_from_json("{\"lambda_ssim\": \"high\"}"), std::invalid_argument);
  EXPECT_THROW(train_config_from_json("not json"), std::invalid_argument);
  EXPECT_THROW(load_train_config("/nonexistent/missing.cfg"), std::invalid_argument);
}

TEST(AdamTest, FirstStepMovesByStepSize) {
  Parameter p{"x", Tensor::vector({1.0, -2.0, 0.5})};
  Adam adam(0.9, 0.999, 1e-12);
  adam.step(p, Tensor::vector({3.0, -0.5, 0.0}), 0.1);
  EXPECT_NEAR(p.value[0], 0.9, 1e-9);
  EXPECT_NEAR(p.value[1], -1.9, 1e-9);
  EXPECT_DOUBLE_EQ(p.value[2], 0.5);
}

TEST(PhysicsModelTest, InitialMaterialIsUniform) {
  const Dataset d = small_dataset(RecipeKind::kStatic, 2, 1);
  ModelConfig mc;
  mc.initial_material.youngs_modulus = 3000.0;
  const PhysicsModel m(mc, d.points, d.volumes, 0);
  const MaterialTensors mat = m.materials();
  for (double e : mat.youngs_modulus.values()) EXPECT_NEAR(e, 3000.0, 60.0);
  for (double nu : mat.poisson_ratio.values()) EXPECT_NEAR(nu, 0.2, 0.01);
}

TEST(PhysicsModelTest, AblationsChangeTheParameterSet) {
  const Dataset d = small_dataset(RecipeKind::kStatic, 2, 1);
  const auto names = [&](ModelConfig mc) {
    PhysicsModel m(mc, d.points, d.volumes, 0);
    std::set<std::string> out;
    for (const Parameter* p : m.parameters()) out.insert(p->name);
    return out;
  };
  ModelConfig full;
  EXPECT_TRUE(names(full).count("f_mat.0.weight"));
  EXPECT_TRUE(names(full).count("f_vel.0.weight"));
  ModelConfig no_ipi = full;
  no_ipi.ipi = false;
  EXPECT_TRUE(names(no_ipi).count("free.codes"));
  EXPECT_TRUE(names(no_ipi).count("free.raw_material"));
  EXPECT_FALSE(names(no_ipi).count("f_vel.0.weight"));
  ModelConfig no_vfd = full;
  no_vfd.vfd = false;
  EXPECT_TRUE(names(no_vfd).count("f_plain.0.weight"));
  EXPECT_FALSE(names(no_vfd).count("f_neck.0.weight"));
  ModelConfig no_mpm = full;
  no_mpm.mpm = false;
  EXPECT_FALSE(names(no_mpm).count("f_mat.0.weight"));
}

TEST(TrainTest, StaticLossDecreases) {
  const Dataset d = small_dataset(RecipeKind::kStatic, 2, 1);
  TrainConfig c = quick_config();
  c.static_iterations = 80;
  PhysicsModel m(c.model, d.points, d.volumes, c.seed);
  const TrainResult r = train(d, m, c);
  ASSERT_EQ(r.history.size(), 80u);
  EXPECT_LT(r.history.back().loss, 0.5 * r.history.front().loss);
  EXPECT_GT(r.history.back().psnr, r.history.front().psnr);
}

TEST(TrainTest, SeedDeterminism) {
  const Dataset d = small_dataset(RecipeKind::kFallingElasticCube);
  const TrainConfig c = quick_config();
  PhysicsModel a(c.model, d.points, d.volumes, c.seed);
  PhysicsModel b(c.model, d.points, d.volumes, c.seed);
  const TrainResult ra = train(d, a, c);
  const TrainResult rb = train(d, b, c);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    EXPECT_EQ(ra.history[i].loss, rb.history[i].loss);
    EXPECT_EQ(ra.history[i].psnr, rb.history[i].psnr);
  }
}

TEST(TrainTest, EveryParameterReceivesGradient) {
  const Dataset d = small_dataset(RecipeKind::kFallingElasticCube);
  for (int variant = 0; variant < 4; ++variant) {
    TrainConfig c = quick_config();
    c.model.ipi = variant != 1;
    c.model.vfd = variant != 2;
    c.model.mpm = variant != 3;
    PhysicsModel m(c.model, d.points, d.volumes, c.seed);
    const TrainResult r = train(d, m, c);
    EXPECT_TRUE(r.dead_parameters.empty())
        << "variant " << variant << ": " << r.dead_parameters.front();
  }
}

TEST(TrainTest, NonFiniteLossAbortsWithPathway) {
  Dataset d = small_dataset(RecipeKind::kFallingElasticCube);
  TrainConfig c = quick_config();
  d.frames[0][0].rgb[5] = std::numeric_limits<double>::quiet_NaN();
  {
    PhysicsModel m(c.model, d.points, d.volumes, c.seed);
    try {
      train(d, m, c);
      FAIL() << "expected divergence";
    } catch (const TrainingDiverged& e) {
      EXPECT_EQ(e.iteration(), 0);
      EXPECT_EQ(e.pathway(), "static");
    }
  }
  d = small_dataset(RecipeKind::kFallingElasticCube);
  for (auto& seq : d.frames) seq[1].rgb[0] = std::numeric_limits<double>::infinity();
  c.static_iterations = 1;
  c.frames_per_iteration = 0;
  c.model.vfd = false;
  PhysicsModel m(c.model, d.points, d.volumes, c.seed);
  try {
    train(d, m, c);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.iteration(), 1);
    EXPECT_EQ(e.pathway(), "mpm");
  }
}

TEST(CheckpointTest, BitExactRoundTrip) {
  const Dataset d = small_dataset(RecipeKind::kFallingElasticCube);
  TrainConfig c = quick_config();
  c.model.ipi = false;
  PhysicsModel m(c.model, d.points, d.volumes, 5);
  train(d, m, c);
  const fs::path p = scratch("ckpt.json");
  save_checkpoint(p, m);
  const PhysicsModel back = load_checkpoint(p);
  const auto a = m.stored_parameters();
  const auto b = back.stored_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i]->name, b[i]->name);
    EXPECT_EQ(a[i]->value.shape(), b[i]->value.shape());
    EXPECT_EQ(a[i]->value.values(), b[i]->value.values()) << a[i]->name;
  }
  EXPECT_EQ(back.canonical_positions().values(), m.canonical_positions().values());
  EXPECT_EQ(back.volumes(), m.volumes());
  EXPECT_FALSE(back.config().ipi);
}

TEST(CheckpointTest, CorruptFileIsReported) {
  const fs::path p = scratch("bad.json");
  std::ofstream(p) << "{\"format\": \"something else\"}";
  EXPECT_THROW(load_checkpoint(p), std::runtime_error);
  EXPECT_THROW(load_checkpoint(scratch("absent.json")), std::runtime_error);
}

TEST(HistoryTest, CsvHasHeaderAndRows) {
  const fs::path p = scratch("history.csv");
  write_history_csv(p, {{0, "static", 0.5, 20.0}, {1, "dynamic", 0.25, 22.5}});
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,stage,loss,psnr");
  std::getline(in, line);
  EXPECT_EQ(line, "0,static,0.5,20");
  std::getline(in, line);
  EXPECT_EQ(line, "1,dynamic,0.25,22.5");
}

// Velocity field fixed to a uniform v0 at all times.
void set_uniform_velocity(PhysicsModel& m, const Vec3& v0) {
  VelocityField& f = m.velocity_field();
  const auto k = static_cast<std::size_t>(f.config().motion_patterns);
  f.neck().zero();
  std::vector<double> h(k, 0.0);
  h[0] = 1.0;
  f.neck().set_output_bias(h);
  f.weight_net().zero();
  std::vector<double> w(6 * k, 0.0);
  for (int i = 0; i < 3; ++i) w[i] = v0[i];
  f.weight_net().set_output_bias(w);
}

TEST(PredictTest, BallisticCenterOfMassFollowsParabola) {
  SceneRecipe r = default_recipe(RecipeKind::kFallingElasticCube);
  r.objects[0].side = 0.125;
  r.objects[0].center = Vec3(0.4, 0.55, 0.5);
  const Vec3 v0(0.3, 0.6, 0.1);
  r.objects[0].velocity = v0;
  r.frames = 16;
  r.train_frames = 10;
  r.width = r.height = 16;
  r.cameras = 1;
  const Dataset d = generate_dataset(r, 0);
  PhysicsModel m(ModelConfig{}, d.points, d.volumes, 0);
  set_uniform_velocity(m, v0);
  const int frame = 15;  // t = 0.3 s
  const double t = d.frame_time(frame);
  ASSERT_NEAR(t, 0.3, 1e-12);
  const Trajectory traj = predict(m, d.sim, frame + 1);
  Vec3 c0 = Vec3::Zero(), c = Vec3::Zero();
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      c0[k] += traj.positions[0][3 * i + k] / m.size();
      c[k] += traj.positions[frame][3 * i + k] / m.size();
    }
  }
  const Vec3 expected = v0 * t + 0.5 * d.sim.gravity * t * t;
  EXPECT_LT((c - c0 - expected).norm(), 0.02 * expected.norm());
}

TEST(ExtrapolateTest, HeldOutFramesAndStaticIdentity) {
  SceneRecipe r = default_recipe(RecipeKind::kStatic);
  r.width = r.height = 16;
  r.cameras = 1;
  const Dataset d = generate_dataset(r, 0);
  TrainConfig c = quick_config();
  c.static_iterations = 1;
  PhysicsModel m(c.model, d.points, d.volumes, 0);
  train(d, m, c);
  const Extrapolation e = extrapolate(m, d);
  ASSERT_EQ(e.frames.size(), 22u);
  EXPECT_EQ(e.frames.front().frame, 67);
  EXPECT_EQ(e.frames.back().frame, 88);
  const Image canonical = render(m.scene(), d.cameras[0]);
  for (const auto& im : e.images[0]) EXPECT_EQ(im.rgb, canonical.rgb);
  EXPECT_EQ(extrapolate(m, d, 5).frames.size(), 5u);
}

TEST(SignatureTest, HomogeneousStaticSceneHasEqualSignatures) {
  const Dataset d = small_dataset(RecipeKind::kStatic, 2, 1);
  PhysicsModel m(ModelConfig{}, d.points, d.volumes, 0);
  set_uniform_velocity(m, Vec3::Zero());
  m.material_decoder().network().zero();
  m.material_decoder().set_default(MaterialParams{});
  const auto ts = uniform_timestamps(0.0, 1.32, 10);
  const auto sig = physics_signature(m, ts);
  ASSERT_EQ(sig.size(), m.size());
  ASSERT_EQ(sig[0].size(), 3u + 3u * 10u);
  for (const auto& row : sig) {
    for (std::size_t j = 0; j < row.size(); ++j) EXPECT_NEAR(row[j], sig[0][j], 1e-9);
  }
}

}  // namespace
}  // namespace splatphys
