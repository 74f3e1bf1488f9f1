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


#include "splatphys/material_model.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "splatphys/ops.hpp"

namespace splatphys {

Lame lame_from_material(const MaterialParams& m) {
  const double e = m.youngs_modulus, nu = m.poisson_ratio;
  return {e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))};
}

Mat3 first_pk_stress(const Mat3& f, double mu, double lambda) {
  const double j = f.determinant();
  if (!(j > 0.0)) throw InvertedElement("first_pk_stress: det F <= 0");
  const PolarResult polar = polar_decompose(f);
  return 2.0 * mu * (f - polar.rotation) +
         lambda * (j - 1.0) * j * f.inverse().transpose();
}

double corotated_energy(const Mat3& f, double mu, double lambda) {
  const PolarResult polar = polar_decompose(f);
  const double j = f.determinant();
  return mu * (f - polar.rotation).squaredNorm() +
         0.5 * lambda * (j - 1.0) * (j - 1.0);
}

StressGradient first_pk_stress_backward(const Mat3& f, double mu, double lambda,
                                        const Mat3& grad_p) {
  const PolarResult polar = polar_decompose(f);
  const double j = f.determinant();
  const Mat3 f_invt = f.inverse().transpose();
  const double c = lambda * (j - 1.0) * j;
  StressGradient g;
  g.mu = 2.0 * (grad_p.array() * (f - polar.rotation).array()).sum();
  const double gp_dot_finvt = (grad_p.array() * f_invt.array()).sum();
  g.lambda = (j - 1.0) * j * gp_dot_finvt;
  // 2 mu (F - R(F))
  g.f = 2.0 * mu * grad_p -
        polar_backward(polar.rotation, polar.stretch, 2.0 * mu * grad_p,
                       Mat3::Zero());
  // c(J) F^-T: dc/dJ = lambda (2J - 1), dJ/dF = J F^-T.
  g.f += gp_dot_finvt * lambda * (2.0 * j - 1.0) * j * f_invt;
  g.f -= c * f_invt * grad_p.transpose() * f_invt;
  return g;
}

Tensor stress_tensor(const Tensor& f, const Tensor& mu, const Tensor& lambda) {
  const std::size_t n = f.rank() == 2 ? f.dim(0) : 0;
  if (f.shape() != Shape{n, 9} || mu.shape() != Shape{n} ||
      lambda.shape() != Shape{n}) {
    throw ShapeError("stress: expected (n, 9), (n), (n), got " +
                     shape_string(f.shape()) + ", " + shape_string(mu.shape()) +
                     ", " + shape_string(lambda.shape()));
  }
  Tensor out({n, 9});
  for (std::size_t i = 0; i < n; ++i) {
    store_mat3(first_pk_stress(load_mat3(f.data().subspan(9 * i, 9)), mu[i],
                               lambda[i]),
               out.mutable_data().subspan(9 * i, 9));
  }
  auto fv = std::make_shared<const std::vector<double>>(f.values());
  auto mv = std::make_shared<const std::vector<double>>(mu.values());
  auto lv = std::make_shared<const std::vector<double>>(lambda.values());
  return record_op(
      "stress", std::move(out), {&f, &mu, &lambda},
      [fv, mv, lv, n](std::span<const double> g,
                      std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < n; ++i) {
          const StressGradient sg = first_pk_stress_backward(
              load_mat3(std::span<const double>(*fv).subspan(9 * i, 9)),
              (*mv)[i], (*lv)[i], load_mat3(g.subspan(9 * i, 9)));
          if (!gin[0].empty()) add_mat3(sg.f, gin[0].subspan(9 * i, 9));
          if (!gin[1].empty()) gin[1][i] += sg.mu;
          if (!gin[2].empty()) gin[2][i] += sg.lambda;
        }
      });
}

namespace {

const double kLn2 = std::numbers::ln2;
const double kPoissonShift = std::log(0.8);  // sigmoid(ln 0.8) = 0.2 / 0.45

double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace

MaterialTensors constrain_material(const Tensor& raw) {
  if (raw.rank() != 2 || raw.dim(1) != 3) {
    throw ShapeError("constrain_material: expected (n, 3), got " +
                     shape_string(raw.shape()));
  }
  const std::size_t n = raw.dim(0);
  const auto column = [&](std::size_t k) {
    return reshape(slice_last(raw, k, k + 1), {n});
  };
  MaterialTensors m;
  m.youngs_modulus = scale(softplus(column(0)), kReferenceModulus / kLn2);
  m.poisson_ratio =
      scale(sigmoid(add_scalar(column(1), kPoissonShift)), kMaxPoisson);
  m.density = scale(softplus(column(2)), kReferenceDensity / kLn2);
  return m;
}

std::vector<double> raw_from_material(const MaterialParams& m) {
  if (!(m.youngs_modulus > 0.0) || !(m.density > 0.0) ||
      !(m.poisson_ratio > 0.0 && m.poisson_ratio < kMaxPoisson)) {
    throw std::invalid_argument(
        "raw_from_material: need E > 0, rho > 0 and 0 < nu < 0.45");
  }
  const double r = m.poisson_ratio / kMaxPoisson;
  return {softplus_inverse(m.youngs_modulus * kLn2 / kReferenceModulus),
          std::log(r / (1.0 - r)) - kPoissonShift,
          softplus_inverse(m.density * kLn2 / kReferenceDensity)};
}

std::pair<Tensor, Tensor> lame_tensors(const Tensor& youngs_modulus,
                                       const Tensor& poisson_ratio) {
  const Tensor one_plus = add_scalar(poisson_ratio, 1.0);
  const Tensor mu = div(youngs_modulus, scale(one_plus, 2.0));
  const Tensor lambda =
      div(mul(youngs_modulus, poisson_ratio),
          mul(one_plus, add_scalar(scale(poisson_ratio, -2.0), 1.0)));
  return {mu, lambda};
}

MaterialDecoder::MaterialDecoder(const MaterialDecoderConfig& config,
                                 std::mt19937_64& rng)
    : config_(config),
      net_("f_mat", encoded_width(3, config.frequencies), 3,
           config.hidden_layers, config.width, rng) {}

MaterialTensors MaterialDecoder::decode(const Tensor& positions) const {
  return constrain_material(
      net_.forward(encode_position(positions, config_.frequencies)));
}

void MaterialDecoder::set_default(const MaterialParams& m) {
  net_.set_output_bias(raw_from_material(m));
}

}  // namespace splatphys
