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


#include "splatphys/velocity_field.hpp"

#include <stdexcept>

#include "splatphys/ops.hpp"

namespace splatphys {

Mat63 basis_matrix(const Vec3& p) {
  Mat63 b;
  b.topRows<3>().setIdentity();
  b.row(3) << 0.0, -p.z(), p.y();
  b.row(4) << p.z(), 0.0, -p.x();
  b.row(5) << -p.y(), p.x(), 0.0;
  return b;
}

Tensor apply_basis(const Tensor& components, const Tensor& positions) {
  const std::size_t n = positions.rank() == 2 ? positions.dim(0) : 0;
  if (components.shape() != Shape{n, 6} || positions.shape() != Shape{n, 3}) {
    throw ShapeError("apply_basis: expected (n, 6) and (n, 3), got " +
                     shape_string(components.shape()) + " and " +
                     shape_string(positions.shape()));
  }
  return add(slice_last(components, 0, 3),
             cross_rows(slice_last(components, 3, 6), positions));
}

VelocityField::VelocityField(const VelocityFieldConfig& config,
                             std::mt19937_64& rng)
    : config_(config) {
  if (config.motion_patterns < 1 || config.code_dims < 1) {
    throw std::invalid_argument("VelocityField: K and D must be positive");
  }
  const auto k = static_cast<std::size_t>(config.motion_patterns);
  const auto d = static_cast<std::size_t>(config.code_dims);
  f_vel_ = Mlp("f_vel", encoded_width(3, config.position_frequencies), d,
               config.hidden_layers, config.width, rng);
  f_neck_ = Mlp("f_neck", d, k, config.hidden_layers, config.width, rng);
  f_neck_.scale_output(config.neck_output_scale);
  f_weight_ = Mlp("f_weight", encoded_width(1, config.time_frequencies), 6 * k,
                  config.hidden_layers, config.width, rng);
}

Tensor VelocityField::codes(const Tensor& canonical_positions) const {
  return f_vel_.forward(
      encode_position(canonical_positions, config_.position_frequencies));
}

Tensor VelocityField::patterns(const Tensor& codes) const {
  return f_neck_.forward(codes);
}

Tensor VelocityField::components_from_patterns(const Tensor& patterns,
                                               double t) const {
  const auto k = static_cast<std::size_t>(config_.motion_patterns);
  const Tensor time = encode_position(Tensor({1, 1}, {t}), config_.time_frequencies);
  const Tensor w = reshape(f_weight_.forward(time), {k, 6});
  return matmul(patterns, w);
}

Tensor VelocityField::components(const Tensor& codes, double t) const {
  return components_from_patterns(patterns(codes), t);
}

Tensor VelocityField::velocity(const Tensor& codes, double t,
                               const Tensor& positions) const {
  return apply_basis(components(codes, t), positions);
}

ParameterRefs VelocityField::parameters() {
  ParameterRefs out = f_vel_.parameters();
  for (Parameter* p : f_neck_.parameters()) out.push_back(p);
  for (Parameter* p : f_weight_.parameters()) out.push_back(p);
  return out;
}

Tensor integrate_positions(const VelocityFn& velocity, const Tensor& positions,
                           double t0, double t1, int steps) {
  if (steps < 1) throw std::invalid_argument("integrate_positions: steps < 1");
  const double h = (t1 - t0) / steps;
  Tensor p = positions;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + h * i;
    const Tensor k1 = velocity(p, t);
    const Tensor k2 = velocity(add(p, scale(k1, 0.5 * h)), t + 0.5 * h);
    const Tensor k3 = velocity(add(p, scale(k2, 0.5 * h)), t + 0.5 * h);
    const Tensor k4 = velocity(add(p, scale(k3, h)), t + h);
    const Tensor incr = add(add(k1, scale(k2, 2.0)), add(scale(k3, 2.0), k4));
    p = add(p, scale(incr, h / 6.0));
  }
  return p;
}

}  // namespace splatphys
