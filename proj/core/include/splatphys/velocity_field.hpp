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


// Divergence-free particle velocities from a latent physics code.
//
//   z   = f_vel(gamma(p0))          per particle, p0 canonical
//   h   = f_neck(z)                 (K)
//   W_t = f_weight(gamma(t))        (K x 6)
//   V   = h W_t = (v_lin, omega)
//   v   = V B(p) = v_lin + omega x p
//
// V does not depend on p, so every particle moves rigidly at any instant.

#ifndef SPLATPHYS_VELOCITY_FIELD_HPP_
#define SPLATPHYS_VELOCITY_FIELD_HPP_

#include <random>

#include "splatphys/linalg.hpp"
#include "splatphys/nn.hpp"
#include "splatphys/tensor.hpp"

namespace splatphys {

struct VelocityFieldConfig {
  int motion_patterns = 16;   // K
  int code_dims = 32;         // D
  int position_frequencies = 6;
  int time_frequencies = 4;
  int hidden_layers = 3;
  std::size_t width = 64;
  double neck_output_scale = 0.01;
};

// Rows 0-2 identity, rows 3-5 the cross-product action of p.
Mat63 basis_matrix(const Vec3& p);

// v = V[:, :3] + V[:, 3:] x p for V (n, 6) and p (n, 3).
Tensor apply_basis(const Tensor& components, const Tensor& positions);

class VelocityField {
 public:
  VelocityField() = default;
  VelocityField(const VelocityFieldConfig& config, std::mt19937_64& rng);

  // z = f_vel(gamma(p0)), (n, D).
  Tensor codes(const Tensor& canonical_positions) const;
  // V = f_neck(z) . W_t, (n, 6).
  Tensor components(const Tensor& codes, double t) const;
  // The time-independent half: h = f_neck(z), (n, K). Callers evaluating
  // many times can cache it.
  Tensor patterns(const Tensor& codes) const;
  Tensor components_from_patterns(const Tensor& patterns, double t) const;
  Tensor velocity(const Tensor& codes, double t, const Tensor& positions) const;

  const VelocityFieldConfig& config() const { return config_; }
  Mlp& code_net() { return f_vel_; }
  Mlp& neck() { return f_neck_; }
  Mlp& weight_net() { return f_weight_; }
  ParameterRefs parameters();

 private:
  VelocityFieldConfig config_;
  Mlp f_vel_;
  Mlp f_neck_;
  Mlp f_weight_;
};

// Velocity as a function of (positions, t).
using VelocityFn = std::function<Tensor(const Tensor& positions, double t)>;

// Classic RK4 from t0 to t1 in `steps` equal steps; stays on the tape.
Tensor integrate_positions(const VelocityFn& velocity, const Tensor& positions,
                           double t0, double t1, int steps);

}  // namespace splatphys

#endif  // SPLATPHYS_VELOCITY_FIELD_HPP_
