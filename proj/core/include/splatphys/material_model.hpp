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


// Per-particle elastic materials and fixed-corotated stress.

#ifndef SPLATPHYS_MATERIAL_MODEL_HPP_
#define SPLATPHYS_MATERIAL_MODEL_HPP_

#include <random>
#include <vector>

#include "splatphys/linalg.hpp"
#include "splatphys/nn.hpp"
#include "splatphys/tensor.hpp"

namespace splatphys {

struct MaterialParams {
  double youngs_modulus = 1e4;
  double poisson_ratio = 0.2;
  double density = 1000.0;
};

struct Lame {
  double mu = 0.0;
  double lambda = 0.0;
};

Lame lame_from_material(const MaterialParams& m);

// P = 2 mu (F - R) + lambda (J - 1) J F^-T. Throws InvertedElement when
// det F <= 0.
Mat3 first_pk_stress(const Mat3& f, double mu, double lambda);
// Psi = mu |F - R|^2 + lambda / 2 (J - 1)^2; P is its gradient.
double corotated_energy(const Mat3& f, double mu, double lambda);

struct StressGradient {
  Mat3 f = Mat3::Zero();
  double mu = 0.0;
  double lambda = 0.0;
};
// Pullback of grad_p through first_pk_stress.
StressGradient first_pk_stress_backward(const Mat3& f, double mu, double lambda,
                                        const Mat3& grad_p);

// Batched first_pk_stress on the tape: f (n, 9), mu (n), lambda (n) ->
// (n, 9).
Tensor stress_tensor(const Tensor& f, const Tensor& mu, const Tensor& lambda);

// Constraint mapping from unconstrained raw outputs (n, 3):
//   E   = 1e4  * softplus(r0) / ln 2
//   nu  = 0.45 * sigmoid(r1 + ln 0.8)
//   rho = 1e3  * softplus(r2) / ln 2
// so raw zeros decode to E = 1e4, nu = 0.2, rho = 1000.
inline constexpr double kReferenceModulus = 1e4;
inline constexpr double kReferenceDensity = 1e3;
inline constexpr double kMaxPoisson = 0.45;

struct MaterialTensors {
  Tensor youngs_modulus;  // (n)
  Tensor poisson_ratio;   // (n)
  Tensor density;         // (n)
};
MaterialTensors constrain_material(const Tensor& raw);
// Raw values that decode exactly to `m`.
std::vector<double> raw_from_material(const MaterialParams& m);

// mu = E / (2 (1 + nu)), lambda = E nu / ((1 + nu)(1 - 2 nu)), elementwise.
std::pair<Tensor, Tensor> lame_tensors(const Tensor& youngs_modulus,
                                       const Tensor& poisson_ratio);

// f_mat: encoded canonical position -> raw material outputs.
struct MaterialDecoderConfig {
  int frequencies = 6;
  int hidden_layers = 3;
  std::size_t width = 64;
};

class MaterialDecoder {
 public:
  MaterialDecoder() = default;
  MaterialDecoder(const MaterialDecoderConfig& config, std::mt19937_64& rng);

  MaterialTensors decode(const Tensor& positions) const;
  // Shifts the output bias so that a zero hidden response decodes to `m`.
  void set_default(const MaterialParams& m);

  const MaterialDecoderConfig& config() const { return config_; }
  Mlp& network() { return net_; }
  const Mlp& network() const { return net_; }

 private:
  MaterialDecoderConfig config_;
  Mlp net_;
};

}  // namespace splatphys

#endif  // SPLATPHYS_MATERIAL_MODEL_HPP_
