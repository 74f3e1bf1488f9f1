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


#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "splatphys/gradcheck.hpp"
#include "splatphys/ops.hpp"
#include "splatphys/velocity_field.hpp"

namespace splatphys {
namespace {

VelocityFieldConfig small_config() {
  VelocityFieldConfig c;
  c.motion_patterns = 4;
  c.code_dims = 6;
  c.position_frequencies = 2;
  c.time_frequencies = 2;
  c.width = 12;
  c.hidden_layers = 2;
  c.neck_output_scale = 1.0;
  return c;
}

TEST(EncodingTest, ZeroInput) {
  const Tensor e = encode_position(Tensor::zeros({1, 3}), 1);
  ASSERT_EQ(e.shape(), (Shape{1, 9}));
  EXPECT_EQ(e.values(), (std::vector<double>{0, 0, 0, 0, 0, 0, 1, 1, 1}));
}

TEST(EncodingTest, HalfTurn) {
  const Tensor e = encode_position(Tensor({1, 3}, {0.5, 0, 0}), 1);
  EXPECT_NEAR(e[3], 1.0, 1e-15);  // sin(pi / 2)
  EXPECT_NEAR(e[6], 0.0, 1e-15);  // cos(pi / 2)
}

TEST(EncodingTest, NoFrequencies) {
  const Tensor p({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(encode_position(p, 0).values(), p.values());
  EXPECT_EQ(encode_position(Tensor::zeros({5, 3}), 6).dim(1), encoded_width(3, 6));
  EXPECT_EQ(encoded_width(3, 6), 39u);
}

TEST(BasisTest, Examples) {
  const Mat63 b0 = basis_matrix(Vec3::Zero());
  EXPECT_TRUE(b0.bottomRows<3>().isZero(0.0));
  const Vec3 p(0.3, -0.7, 1.1);
  Eigen::Matrix<double, 1, 6> v;
  v << 1, 0, 0, 0, 0, 0;
  EXPECT_EQ((v * basis_matrix(p)).transpose(), Vec3(1, 0, 0));
  v << 0, 0, 0, 0, 0, 1;
  EXPECT_EQ((v * basis_matrix(Vec3(1, 0, 0))).transpose(), Vec3(0, 1, 0));
}

TEST(BasisTest, ApplyBasisMatchesMatrix) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor comps({4, 6}), pos({4, 3});
  for (double& x : comps.mutable_data()) x = u(rng);
  for (double& x : pos.mutable_data()) x = u(rng);
  const Tensor v = apply_basis(comps, pos);
  for (std::size_t i = 0; i < 4; ++i) {
    Eigen::Matrix<double, 1, 6> row;
    for (int k = 0; k < 6; ++k) row[k] = comps[6 * i + k];
    const Vec3 expected =
        (row * basis_matrix(Vec3(pos[3 * i], pos[3 * i + 1], pos[3 * i + 2]))).transpose();
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(v[3 * i + k], expected[k], 1e-15);
  }
}

TEST(VelocityFieldTest, ZeroNeckGivesZeroVelocity) {
  std::mt19937_64 rng(2);
  VelocityField field(small_config(), rng);
  field.neck().zero();
  const Tensor p({3, 3}, {0.1, 0.2, 0.3, 0.5, 0.5, 0.5, 0.9, 0.1, 0.4});
  const Tensor v = field.velocity(field.codes(p), 0.4, p);
  for (double x : v.values()) EXPECT_EQ(x, 0.0);
}

TEST(VelocityFieldTest, ConstantDownwardField) {
  // h = e_0, W_t rows all (0, 0, -1, 0, 0, 0): zero the weight net and set
  // its output bias.
  std::mt19937_64 rng(3);
  VelocityFieldConfig cfg = small_config();
  VelocityField field(cfg, rng);
  field.neck().zero();
  field.neck().set_output_bias({1, 0, 0, 0});
  field.weight_net().zero();
  std::vector<double> bias(6 * cfg.motion_patterns, 0.0);
  bias[2] = -1.0;
  field.weight_net().set_output_bias(bias);
  std::mt19937_64 prng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor p({10, 3});
  for (double& x : p.mutable_data()) x = u(prng);
  const Tensor v = field.velocity(field.codes(p), 0.7, p);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(v[3 * i], 0.0);
    EXPECT_EQ(v[3 * i + 1], 0.0);
    EXPECT_EQ(v[3 * i + 2], -1.0);
  }
}

double divergence(const VelocityField& field, const Tensor& z, double t,
                  const Vec3& p, double h) {
  double div = 0.0;
  for (int a = 0; a < 3; ++a) {
    Vec3 pp = p, pm = p;
    pp[a] += h;
    pm[a] -= h;
    const Tensor vp = field.velocity(z, t, Tensor({1, 3}, {pp.x(), pp.y(), pp.z()}));
    const Tensor vm = field.velocity(z, t, Tensor({1, 3}, {pm.x(), pm.y(), pm.z()}));
    div += (vp[a] - vm[a]) / (2 * h);
  }
  return div;
}

TEST(VelocityFieldTest, DivergenceFree) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    VelocityField field(small_config(), rng);
    const Tensor z = field.codes(Tensor({1, 3}, {u(rng), u(rng), u(rng)}));
    const double d = divergence(field, z, u(rng) + 1.0, Vec3(u(rng), u(rng), u(rng)), 1e-4);
    EXPECT_LT(std::abs(d), 1e-6);
  }
}

TEST(VelocityFieldTest, LinearPartIgnoresPosition) {
  std::mt19937_64 rng(6);
  VelocityField field(small_config(), rng);
  const Tensor z = field.codes(Tensor({1, 3}, {0.2, 0.3, 0.4}));
  const Tensor comps = field.components(z, 0.5);
  Tensor lin = comps.detach();
  for (int k = 3; k < 6; ++k) lin.set(k, 0.0);
  EXPECT_EQ(apply_basis(lin, Tensor({1, 3}, {0.1, 0.1, 0.1})).values(),
            apply_basis(lin, Tensor({1, 3}, {-5, 2, 9})).values());
}

TEST(VelocityFieldTest, GradientsReachEveryNetwork) {
  std::mt19937_64 rng(7);
  VelocityField field(small_config(), rng);
  Tape tape;
  for (Parameter* p : field.parameters()) p->value = tape.leaf(p->value);
  const Tensor p0({2, 3}, {0.1, 0.2, 0.3, 0.6, 0.5, 0.4});
  const Tensor loss = sum(square(field.velocity(field.codes(p0), 0.3, p0)));
  const GradientMap g = tape.backward(loss);
  for (Parameter* p : field.parameters()) {
    double norm = 0.0;
    for (double v : g.grad(p->value).values()) norm += v * v;
    EXPECT_GT(norm, 0.0) << p->name;
    p->value = p->value.detach();
  }
}

TEST(VelocityFieldTest, MatchesFiniteDifferencesInPositions) {
  std::mt19937_64 rng(8);
  VelocityField field(small_config(), rng);
  const Tensor p0({3, 3}, {0.1, 0.2, 0.3, 0.6, 0.5, 0.4, 0.9, 0.3, 0.2});
  const ScalarFn f = [&](const std::vector<Tensor>& in) {
    const Tensor z = field.codes(in[0]);
    return sum(square(integrate_positions(
        [&](const Tensor& p, double t) { return field.velocity(z, t, p); }, in[0],
        0.0, 0.2, 3)));
  };
  EXPECT_LT(check_gradients(f, {p0}).relative_error, 1e-6);
}

TEST(IntegrateTest, ZeroAndConstantFields) {
  const Tensor p0({2, 3}, {0.1, 0.2, 0.3, -1, 2, 0.5});
  const VelocityFn zero = [](const Tensor& p, double) { return Tensor::zeros(p.shape()); };
  EXPECT_EQ(integrate_positions(zero, p0, 0, 1, 4).values(), p0.values());
  const VelocityFn down = [](const Tensor& p, double) {
    return add(Tensor::zeros(p.shape()), Tensor::vector({0, 0, -1}));
  };
  const Tensor p1 = integrate_positions(down, p0, 0.0, 0.5, 7);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(p1[3 * i + 2] - p0[3 * i + 2], -0.5, 1e-15);
    EXPECT_EQ(p1[3 * i], p0[3 * i]);
  }
}

TEST(IntegrateTest, CircularOrbit) {
  const double omega = 2.0;
  const VelocityFn spin = [&](const Tensor& p, double) {
    const std::size_t n = p.dim(0);
    Tensor comps({n, 6});
    for (std::size_t i = 0; i < n; ++i) comps.set(6 * i + 5, omega);
    return apply_basis(comps, p);
  };
  const Tensor p0({1, 3}, {0.7, 0.0, 0.3});
  const Tensor p1 = integrate_positions(spin, p0, 0.0, 2.0, 100);
  EXPECT_NEAR(std::hypot(p1[0], p1[1]), 0.7, 1e-6);
  EXPECT_NEAR(p1[2], 0.3, 1e-15);
  EXPECT_NEAR(std::atan2(p1[1], p1[0]), std::remainder(omega * 2.0, 2 * std::numbers::pi), 1e-6);
}

TEST(IntegrateTest, SharedCodePreservesDistances) {
  std::mt19937_64 rng(9);
  VelocityField field(small_config(), rng);
  const Tensor z1 = field.codes(Tensor({1, 3}, {0.3, 0.3, 0.3}));
  Tensor z({4, z1.dim(1)});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < z1.dim(1); ++k) z.set(i * z1.dim(1) + k, z1[k]);
  const Tensor p0({4, 3}, {0, 0, 0, 0.2, 0, 0, 0, 0.3, 0, 0.1, 0.1, 0.4});
  const Tensor p1 = integrate_positions(
      [&](const Tensor& p, double t) { return field.velocity(z, t, p); }, p0, 0.0,
      0.3, 200);
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      double d0 = 0, d1 = 0;
      for (int k = 0; k < 3; ++k) {
        d0 += std::pow(p0[3 * a + k] - p0[3 * b + k], 2);
        d1 += std::pow(p1[3 * a + k] - p1[3 * b + k], 2);
      }
      EXPECT_NEAR(std::sqrt(d0), std::sqrt(d1), 1e-5);
    }
}

}  // namespace
}  // namespace splatphys
