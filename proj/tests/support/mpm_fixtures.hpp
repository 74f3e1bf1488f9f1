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


// Particle blocks for simulator tests.

#ifndef SPLATPHYS_TESTS_MPM_FIXTURES_HPP_
#define SPLATPHYS_TESTS_MPM_FIXTURES_HPP_

#include <memory>
#include <random>

#include "splatphys/material_model.hpp"
#include "splatphys/mpm.hpp"

namespace splatphys::testing {

struct Block {
  ParticleState state;
  std::shared_ptr<ParticleBody> body = std::make_shared<ParticleBody>();
  std::vector<double> mu, lambda;
};

// per_axis^3 particles on a regular lattice filling a cube of edge `side`
// centred at `center`, with uniform velocity and material.
inline Block make_block(const Vec3& center, double side, int per_axis,
                        const Vec3& velocity, const MaterialParams& material) {
  Block b;
  const double spacing = side / per_axis;
  const double volume = spacing * spacing * spacing;
  const Lame lame = lame_from_material(material);
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < per_axis; ++k) {
        const Vec3 offset = (Vec3(i, j, k) + Vec3::Constant(0.5)) * spacing -
                            Vec3::Constant(0.5 * side);
        b.state.positions.push_back(center + offset);
        b.state.velocities.push_back(velocity);
        b.state.deformation.push_back(Mat3::Identity());
        b.body->mass.push_back(material.density * volume);
        b.body->volume.push_back(volume);
        b.mu.push_back(lame.mu);
        b.lambda.push_back(lame.lambda);
      }
  return b;
}

inline SimConfig no_gravity(SimConfig c = {}) {
  c.gravity = Vec3::Zero();
  return c;
}

}  // namespace splatphys::testing

#endif  // SPLATPHYS_TESTS_MPM_FIXTURES_HPP_
