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


#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "splatphys/gaussian_scene.hpp"

namespace splatphys {
namespace {

const double kLn2 = std::log(2.0);

Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Quat q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

TEST(CovarianceTest, IdentityRotationUnitScale) {
  EXPECT_TRUE(covariance_from_rs(identity_quat(), Vec3::Zero())
                  .isApprox(Mat3::Identity(), 1e-15));
}

TEST(CovarianceTest, StretchedAlongX) {
  const Mat3 s = covariance_from_rs(identity_quat(), Vec3(kLn2, 0, 0));
  EXPECT_LT((s - Mat3(Vec3(4, 1, 1).asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CovarianceTest, QuarterTurnAboutZPermutesAxes) {
  const Quat q = axis_angle_quat(Vec3::UnitZ(), std::numbers::pi / 2);
  const Mat3 s = covariance_from_rs(q, Vec3(kLn2, 0, 0));
  EXPECT_LT((s - Mat3(Vec3(1, 4, 1).asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CovarianceTest, ZeroQuaternionIsRejected) {
  EXPECT_THROW(covariance_from_rs(Quat::Zero(), Vec3::Zero()),
               std::invalid_argument);
}

TEST(CovarianceTest, SymmetricPositiveSemidefinite) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 500; ++trial) {
    const Mat3 s = covariance_from_rs(random_quat(rng), Vec3(u(rng), u(rng), u(rng)));
    EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(s);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(CovarianceTest, EigenvaluesInvariantUnderExtraRotation) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const Quat q = random_quat(rng);
    const Vec3 s(u(rng), u(rng), u(rng));
    const Quat extra = random_quat(rng);
    // Hamilton product extra * q.
    const double w1 = extra[0], w2 = q[0];
    const Vec3 v1 = extra.tail<3>(), v2 = q.tail<3>();
    Quat composed;
    composed << w1 * w2 - v1.dot(v2), w1 * v2 + w2 * v1 + v1.cross(v2);
    Eigen::SelfAdjointEigenSolver<Mat3> a(covariance_from_rs(q, s));
    Eigen::SelfAdjointEigenSolver<Mat3> b(covariance_from_rs(composed, s));
    EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EvaluateGaussianTest, CenterIsExactlyOne) {
  GaussianParticle g;
  g.position = Vec3(0.3, -0.2, 1.0);
  g.log_scale = Vec3(-1.0, 0.5, 0.2);
  g.rotation = axis_angle_quat(Vec3(1, 2, 3), 0.7);
  EXPECT_EQ(evaluate_gaussian(g, g.position), 1.0);
}

TEST(EvaluateGaussianTest, UnitCovariance) {
  GaussianParticle g;
  EXPECT_NEAR(evaluate_gaussian(g, Vec3(0, 1, 0)), std::exp(-0.5), 1e-15);
  const double far = evaluate_gaussian(g, Vec3(10, 0, 0));
  EXPECT_NEAR(far, std::exp(-50.0), 1e-30);
  EXPECT_LT(far, 1e-21);
}

TEST(EvaluateGaussianTest, MonotoneAlongRays) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    GaussianParticle g;
    g.position = Vec3(u(rng), u(rng), u(rng));
    g.rotation = random_quat(rng);
    g.log_scale = Vec3(u(rng), u(rng), u(rng));
    const Vec3 dir = Vec3(u(rng), u(rng), u(rng)).normalized();
    double prev = 1.0;
    for (int k = 1; k <= 50; ++k) {
      const double v = evaluate_gaussian(g, g.position + 0.1 * k * dir);
      EXPECT_LE(v, prev);
      EXPECT_GT(v, -1e-300);
      prev = v;
    }
  }
}

TEST(ProjectionTest, FixedJacobianDropsDepthAxis) {
  Mat23 j;
  j << 1, 0, 0, 0, 1, 0;
  const Mat2 out = project_covariance(Mat3(Vec3(2, 3, 5).asDiagonal()),
                                      Mat3::Identity(), j);
  EXPECT_TRUE(out.isApprox(Mat2(Vec2(2, 3).asDiagonal()), 1e-15));
}

TEST(ProjectionTest, OnAxisScalesByFocalOverDepth) {
  Camera cam;
  cam.fx = cam.fy = 80.0;
  const double z = 4.0;
  const Projection p = project_covariance(Mat3::Identity(), cam, Vec3(0, 0, z));
  ASSERT_FALSE(p.culled);
  const double k = (80.0 / z) * (80.0 / z);
  EXPECT_LT((p.covariance - Mat2(Vec2(k, k).asDiagonal())).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_DOUBLE_EQ(p.center.x(), cam.cx);
  EXPECT_DOUBLE_EQ(p.depth, z);
}

TEST(ProjectionTest, BehindCameraIsCulled) {
  Camera cam;
  EXPECT_TRUE(project_covariance(Mat3::Identity(), cam, Vec3(0, 0, -1)).culled);
  EXPECT_TRUE(project_covariance(Mat3::Identity(), cam, Vec3(0, 0, 0.005)).culled);
}

TEST(ProjectionTest, ResultIsSymmetric) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-1, 1);
  const Camera cam = Camera::look_at(Vec3(0, 1, -3), Vec3::Zero(), Vec3::UnitY(),
                                     0.8, 64, 64);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 s = covariance_from_rs(random_quat(rng), Vec3(u(rng), u(rng), u(rng)));
    const Projection p = project_covariance(s, cam, Vec3(u(rng), u(rng), u(rng)) * 0.5);
    ASSERT_FALSE(p.culled);
    EXPECT_EQ(p.covariance(0, 1), p.covariance(1, 0));
  }
}

TEST(CameraTest, LookAtIsOrthonormalAndCentersTarget) {
  const Camera cam = Camera::look_at(Vec3(2, 1, -3), Vec3(0.1, 0.2, 0.3),
                                     Vec3::UnitY(), 0.7, 48, 32);
  EXPECT_NO_THROW(cam.validate());
  EXPECT_LT((cam.center() - Vec3(2, 1, -3)).norm(), 1e-12);
  const Projection p = project_covariance(Mat3::Identity(), cam, Vec3(0.1, 0.2, 0.3));
  EXPECT_NEAR(p.center.x(), 23.5, 1e-9);
  EXPECT_NEAR(p.center.y(), 15.5, 1e-9);
  // World up appears toward smaller image y.
  const Projection above =
      project_covariance(Mat3::Identity(), cam, Vec3(0.1, 0.5, 0.3));
  EXPECT_LT(above.center.y(), p.center.y());
}

TEST(CameraTest, NonOrthonormalRotationIsRejected) {
  Camera cam;
  cam.world_to_camera(0, 0) = 1.0 + 1e-6;
  EXPECT_THROW(cam.validate(), std::invalid_argument);
  EXPECT_EQ(camera_ring(5, 3.0, 1.0, Vec3::Zero(), 0.7, 16, 16).size(), 5u);
}

TEST(SceneTest, ValidateAndNormalize) {
  Scene scene;
  GaussianParticle g;
  g.position = Vec3(0.5, 0.5, 0.5);
  g.rotation = Quat(2, 0, 0, 0);
  scene.particles.push_back(g);
  EXPECT_NO_THROW(scene.validate());
  scene.normalize_rotations();
  EXPECT_NEAR(scene.particles[0].rotation.norm(), 1.0, 1e-12);
  scene.particles[0].position.x() = 2.0;
  EXPECT_THROW(scene.validate(), std::invalid_argument);
  scene.particles[0].position.x() = 0.5;
  scene.particles[0].color = {0.0};
  EXPECT_THROW(scene.validate(), std::invalid_argument);
}

TEST(SceneTest, MassFromDensityAndVolume) {
  Scene scene;
  scene.particles.resize(8);
  scene.assign_mass(1000.0, 0.008);
  for (const auto& p : scene.particles) {
    EXPECT_DOUBLE_EQ(p.rest_volume, 0.001);
    EXPECT_DOUBLE_EQ(p.mass, 1.0);
    EXPECT_TRUE(p.deformation.isIdentity(0.0));
  }
}

TEST(SceneTest, TensorRoundTrip) {
  Scene scene;
  scene.sh_degree = 1;
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int i = 0; i < 4; ++i) {
    GaussianParticle g;
    g.position = Vec3(u(rng), u(rng), u(rng));
    g.rotation = random_quat(rng);
    g.log_scale = Vec3(u(rng), u(rng), u(rng));
    g.opacity_logit = u(rng);
    g.color.assign(12, 0.0);
    for (double& c : g.color) c = u(rng);
    scene.particles.push_back(g);
  }
  Scene copy = scene;
  for (auto& p : copy.particles) p = GaussianParticle{};
  for (auto& p : copy.particles) p.color.assign(12, 0.0);
  apply_tensors(scene_tensors(scene), copy);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    EXPECT_EQ(copy.particles[i].position, scene.particles[i].position);
    EXPECT_EQ(copy.particles[i].rotation, scene.particles[i].rotation);
    EXPECT_EQ(copy.particles[i].color, scene.particles[i].color);
    EXPECT_EQ(copy.particles[i].opacity_logit, scene.particles[i].opacity_logit);
  }
}

}  // namespace
}  // namespace splatphys
