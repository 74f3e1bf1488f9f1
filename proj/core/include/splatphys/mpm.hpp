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


// Explicit material point method with PIC transfers on a quadratic
// B-spline grid.
//
// One substep:
//   m_c = sum_p w_cp m_p,  q_c = sum_p w_cp m_p v_p
//   f_c = -sum_p V_p P(F_p) grad w_cp
//   v_c = (q_c + dt f_c) / m_c + dt g     (0 where m_c < 1e-12 or sticky)
//   v_p = sum_c w_cp v_c,  grad v_p = sum_c v_c grad w_cp^T
//   F_p <- (I + dt grad v_p) F_p,  det clamped from below by scaling
//   x_p <- x_p + dt v_p

#ifndef SPLATPHYS_MPM_HPP_
#define SPLATPHYS_MPM_HPP_

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "splatphys/linalg.hpp"
#include "splatphys/tensor.hpp"

namespace splatphys {

struct SimConfig {
  Vec3 origin = Vec3::Zero();
  int cells = 32;  // per axis; nodes 0..cells
  double cell_width = 1.0 / 32.0;
  double dt = 2e-4;
  int substeps_per_frame = 200;
  Vec3 gravity = Vec3(0.0, -9.8, 0.0);
  int boundary = 3;  // sticky node layers on every face
  double min_j = 0.05;

  double frame_time() const { return dt * substeps_per_frame; }
  // Throws std::invalid_argument on nonsensical values.
  void validate() const;
};

inline constexpr double kMinNodeMass = 1e-12;

class CflViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Particle outside the region where its stencil fits on the grid.
class OutOfGrid : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// 3 x 3 x 3 stencil; entry (i, j, k) at index 9 i + 3 j + k.
struct KernelStencil {
  std::array<int, 3> base{};
  std::array<std::array<double, 3>, 3> w{};    // per axis
  std::array<std::array<double, 3>, 3> dw{};   // d/dx, world units
  std::array<std::array<double, 3>, 3> ddw{};  // d2/dx2, world units

  double weight(int n) const { return w[0][n / 9] * w[1][n / 3 % 3] * w[2][n % 3]; }
  Vec3 gradient(int n) const;
  Mat3 hessian(int n) const;
  std::array<int, 3> node(int n) const {
    return {base[0] + n / 9, base[1] + n / 3 % 3, base[2] + n % 3};
  }
};

// Throws OutOfGrid unless 1 <= (p - origin) / h <= cells - 1 per axis.
KernelStencil kernel_weights(const Vec3& p, const SimConfig& config);

struct ParticleState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<Mat3> deformation;
  std::size_t size() const { return positions.size(); }
};

// Constant per-particle quantities.
struct ParticleBody {
  std::vector<double> mass;
  std::vector<double> volume;
};

struct Grid {
  std::vector<std::array<int, 3>> nodes;  // active nodes, first-touch order
  std::vector<double> mass;
  std::vector<Vec3> momentum;
  std::vector<Vec3> force;
  std::vector<Vec3> velocity;

  double total_mass() const;
  Vec3 total_momentum() const;
  // Index of `node` in the active list or -1.
  int find(const std::array<int, 3>& node) const;
};

Grid p2g(const ParticleState& state, const ParticleBody& body,
         const SimConfig& config);
// Accumulates f_c = -sum_p V_p P_p grad w_cp into grid.force.
void add_internal_forces(Grid& grid, const ParticleState& state,
                         const ParticleBody& body,
                         const std::vector<Mat3>& stress,
                         const SimConfig& config);
void grid_update(Grid& grid, const SimConfig& config);
// Interpolates grid velocities back and advances F and x.
ParticleState g2p(const Grid& grid, const ParticleState& state,
                  const SimConfig& config);

// Full substep with per-particle Lame parameters.
ParticleState substep(const ParticleState& state, const ParticleBody& body,
                      const std::vector<double>& mu,
                      const std::vector<double>& lambda,
                      const SimConfig& config);

// Tensor state layout: (n, 15) rows [x(3), v(3), F(9) row-major].
Tensor pack_state(const Tensor& positions, const Tensor& velocities);
Tensor state_positions(const Tensor& state);
Tensor state_velocities(const Tensor& state);
Tensor state_deformation(const Tensor& state);
Tensor state_tensor(const ParticleState& state);
ParticleState particle_state(const Tensor& state);

// Differentiable substep. `step` only labels error messages.
Tensor substep(const Tensor& state, const Tensor& mu, const Tensor& lambda,
               std::shared_ptr<const ParticleBody> body,
               const SimConfig& config, long step = 0);

// States at frames 0..frames-1; frame 0 is the input.
std::vector<Tensor> rollout(const Tensor& state, const Tensor& mu,
                            const Tensor& lambda,
                            std::shared_ptr<const ParticleBody> body,
                            const SimConfig& config, int frames);

// Diagnostics.
Vec3 total_momentum(const ParticleState& state, const ParticleBody& body);
double kinetic_energy(const ParticleState& state, const ParticleBody& body);
double elastic_energy(const ParticleState& state, const ParticleBody& body,
                      const std::vector<double>& mu,
                      const std::vector<double>& lambda);
Vec3 center_of_mass(const ParticleState& state, const ParticleBody& body);

// Columnar text: "index x y z vx vy vz" per particle.
void write_snapshot(const std::string& path, const ParticleState& state);

}  // namespace splatphys

#endif  // SPLATPHYS_MPM_HPP_
