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


#include "splatphys/mpm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "splatphys/material_model.hpp"
#include "splatphys/ops.hpp"

namespace splatphys {

void SimConfig::validate() const {
  if (cells < 4 || !(cell_width > 0.0) || !(dt > 0.0) ||
      substeps_per_frame < 1 || boundary < 0 || 2 * boundary >= cells ||
      !(min_j > 0.0) || !origin.allFinite() || !gravity.allFinite()) {
    throw std::invalid_argument("SimConfig: invalid grid or step settings");
  }
}

Vec3 KernelStencil::gradient(int n) const {
  const int i = n / 9, j = n / 3 % 3, k = n % 3;
  return Vec3(dw[0][i] * w[1][j] * w[2][k], w[0][i] * dw[1][j] * w[2][k],
              w[0][i] * w[1][j] * dw[2][k]);
}

Mat3 KernelStencil::hessian(int n) const {
  const int i = n / 9, j = n / 3 % 3, k = n % 3;
  Mat3 h;
  h(0, 0) = ddw[0][i] * w[1][j] * w[2][k];
  h(1, 1) = w[0][i] * ddw[1][j] * w[2][k];
  h(2, 2) = w[0][i] * w[1][j] * ddw[2][k];
  h(0, 1) = h(1, 0) = dw[0][i] * dw[1][j] * w[2][k];
  h(0, 2) = h(2, 0) = dw[0][i] * w[1][j] * dw[2][k];
  h(1, 2) = h(2, 1) = w[0][i] * dw[1][j] * dw[2][k];
  return h;
}

KernelStencil kernel_weights(const Vec3& p, const SimConfig& config) {
  KernelStencil s;
  const double inv_h = 1.0 / config.cell_width;
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - config.origin[a]) * inv_h;
    if (!(u >= 1.0 && u <= config.cells - 1.0)) {
      std::ostringstream msg;
      msg << "kernel_weights: position (" << p.transpose()
          << ") is outside the grid interior";
      throw OutOfGrid(msg.str());
    }
    const int base = static_cast<int>(std::floor(u - 0.5));
    const double fx = u - base;  // in [0.5, 1.5)
    s.base[a] = base;
    s.w[a] = {0.5 * (1.5 - fx) * (1.5 - fx), 0.75 - (fx - 1.0) * (fx - 1.0),
              0.5 * (fx - 0.5) * (fx - 0.5)};
    s.dw[a] = {-(1.5 - fx) * inv_h, -2.0 * (fx - 1.0) * inv_h,
               (fx - 0.5) * inv_h};
    s.ddw[a] = {inv_h * inv_h, -2.0 * inv_h * inv_h, inv_h * inv_h};
  }
  return s;
}

double Grid::total_mass() const {
  double m = 0.0;
  for (double v : mass) m += v;
  return m;
}

Vec3 Grid::total_momentum() const {
  Vec3 q = Vec3::Zero();
  for (const Vec3& v : momentum) q += v;
  return q;
}

int Grid::find(const std::array<int, 3>& node) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == node) return static_cast<int>(i);
  return -1;
}

namespace {

// Everything one substep computes, kept for the backward pass.
struct Workspace {
  std::vector<KernelStencil> stencils;
  std::vector<std::array<int, 27>> slots;
  Grid grid;
  std::vector<char> free_node;  // massive and not sticky
  std::vector<Mat3> stress;
  std::vector<Mat3> grad_v;
  std::vector<Mat3> f_trial;    // (I + dt grad v) F before clamping
  std::vector<double> clamp_scale;  // 1 when not clamped
};

std::string at_step(long step) {
  return step >= 0 ? " at substep " + std::to_string(step) : std::string();
}

void build_grid(const ParticleState& state, const ParticleBody& body,
                const SimConfig& config, Workspace& ws) {
  const std::size_t n = state.size();
  if (body.mass.size() != n || body.volume.size() != n ||
      state.velocities.size() != n || state.deformation.size() != n) {
    throw std::invalid_argument("mpm: particle arrays have mismatched sizes");
  }
  const int side = config.cells + 1;
  std::vector<int> slot_of(static_cast<std::size_t>(side) * side * side, -1);
  ws.stencils.resize(n);
  ws.slots.resize(n);
  Grid& g = ws.grid;
  g = Grid{};
  for (std::size_t p = 0; p < n; ++p) {
    try {
      ws.stencils[p] = kernel_weights(state.positions[p], config);
    } catch (const OutOfGrid& e) {
      throw OutOfGrid("particle " + std::to_string(p) + ": " + e.what());
    }
    const KernelStencil& s = ws.stencils[p];
    for (int c = 0; c < 27; ++c) {
      const auto node = s.node(c);
      int& slot = slot_of[(static_cast<std::size_t>(node[0]) * side + node[1]) * side + node[2]];
      if (slot < 0) {
        slot = static_cast<int>(g.nodes.size());
        g.nodes.push_back(node);
        g.mass.push_back(0.0);
        g.momentum.push_back(Vec3::Zero());
      }
      ws.slots[p][c] = slot;
      const double wm = s.weight(c) * body.mass[p];
      g.mass[slot] += wm;
      g.momentum[slot] += wm * state.velocities[p];
    }
  }
  g.force.assign(g.nodes.size(), Vec3::Zero());
  g.velocity.assign(g.nodes.size(), Vec3::Zero());
}

void scatter_forces(const ParticleBody& body, const std::vector<Mat3>& stress,
                    Workspace& ws) {
  for (std::size_t p = 0; p < stress.size(); ++p) {
    const Mat3 vp = body.volume[p] * stress[p];
    for (int c = 0; c < 27; ++c) {
      ws.grid.force[ws.slots[p][c]] -= vp * ws.stencils[p].gradient(c);
    }
  }
}

bool sticky(const std::array<int, 3>& node, const SimConfig& config) {
  for (int a = 0; a < 3; ++a) {
    if (node[a] < config.boundary || node[a] > config.cells - config.boundary) {
      return true;
    }
  }
  return false;
}

void update_velocities(Grid& g, const SimConfig& config, long step,
                       std::vector<char>* free_node) {
  if (free_node) free_node->assign(g.nodes.size(), 0);
  for (std::size_t c = 0; c < g.nodes.size(); ++c) {
    if (g.mass[c] < kMinNodeMass || sticky(g.nodes[c], config)) {
      g.velocity[c].setZero();
      continue;
    }
    g.velocity[c] = (g.momentum[c] + config.dt * g.force[c]) / g.mass[c] +
                    config.dt * config.gravity;
    if (free_node) (*free_node)[c] = 1;
    if (!g.velocity[c].allFinite()) {
      throw std::runtime_error("mpm: non-finite grid velocity" + at_step(step));
    }
  }
}

// Nearly empty nodes may carry large velocities with negligible weight, so
// the guard looks at the interpolated particle velocities.
void check_cfl(const std::vector<Vec3>& velocities, const SimConfig& config,
               long step) {
  double vmax = 0.0;
  for (const Vec3& v : velocities) vmax = std::max(vmax, v.norm());
  if (!(vmax * config.dt < config.cell_width)) {
    std::ostringstream msg;
    msg << "mpm: CFL condition violated" << at_step(step) << " (dt * |v| = "
        << vmax * config.dt << " >= h = " << config.cell_width
        << "); use a smaller dt";
    throw CflViolation(msg.str());
  }
}

ParticleState gather(const ParticleState& state, const SimConfig& config,
                     long step, Workspace& ws) {
  const std::size_t n = state.size();
  ParticleState out;
  out.positions.resize(n);
  out.velocities.resize(n);
  out.deformation.resize(n);
  ws.grad_v.resize(n);
  ws.f_trial.resize(n);
  ws.clamp_scale.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    Vec3 v = Vec3::Zero();
    Mat3 gv = Mat3::Zero();
    for (int c = 0; c < 27; ++c) {
      const Vec3& vc = ws.grid.velocity[ws.slots[p][c]];
      v += ws.stencils[p].weight(c) * vc;
      gv += vc * ws.stencils[p].gradient(c).transpose();
    }
    if (!v.allFinite()) {
      throw std::runtime_error("mpm: particle " + std::to_string(p) +
                               " has a non-finite velocity" + at_step(step));
    }
    const Mat3 ft = (Mat3::Identity() + config.dt * gv) * state.deformation[p];
    const double j = ft.determinant();
    if (!(j > 0.0)) {
      throw InvertedElement("mpm: particle " + std::to_string(p) +
                            " inverted" + at_step(step));
    }
    const double s = j < config.min_j ? std::cbrt(config.min_j / j) : 1.0;
    ws.grad_v[p] = gv;
    ws.f_trial[p] = ft;
    ws.clamp_scale[p] = s;
    out.velocities[p] = v;
    out.deformation[p] = s * ft;
    out.positions[p] = state.positions[p] + config.dt * v;
  }
  check_cfl(out.velocities, config, step);
  return out;
}

ParticleState run_substep(const ParticleState& state, const ParticleBody& body,
                          std::span<const double> mu,
                          std::span<const double> lambda,
                          const SimConfig& config, long step, Workspace& ws) {
  build_grid(state, body, config, ws);
  const std::size_t n = state.size();
  ws.stress.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    try {
      ws.stress[p] = first_pk_stress(state.deformation[p], mu[p], lambda[p]);
    } catch (const InvertedElement&) {
      throw InvertedElement("mpm: particle " + std::to_string(p) +
                            " inverted" + at_step(step));
    }
  }
  scatter_forces(body, ws.stress, ws);
  update_velocities(ws.grid, config, step, &ws.free_node);
  return gather(state, config, step, ws);
}

}  // namespace

Grid p2g(const ParticleState& state, const ParticleBody& body,
         const SimConfig& config) {
  Workspace ws;
  build_grid(state, body, config, ws);
  return ws.grid;
}

void add_internal_forces(Grid& grid, const ParticleState& state,
                         const ParticleBody& body,
                         const std::vector<Mat3>& stress,
                         const SimConfig& config) {
  for (std::size_t p = 0; p < state.size(); ++p) {
    const KernelStencil s = kernel_weights(state.positions[p], config);
    const Mat3 vp = body.volume[p] * stress[p];
    for (int c = 0; c < 27; ++c) {
      const int slot = grid.find(s.node(c));
      if (slot < 0) throw std::invalid_argument("add_internal_forces: grid lacks a stencil node");
      grid.force[slot] -= vp * s.gradient(c);
    }
  }
}

void grid_update(Grid& grid, const SimConfig& config) {
  update_velocities(grid, config, -1, nullptr);
}

ParticleState g2p(const Grid& grid, const ParticleState& state,
                  const SimConfig& config) {
  Workspace ws;
  ws.grid = grid;
  const std::size_t n = state.size();
  ws.stencils.resize(n);
  ws.slots.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    ws.stencils[p] = kernel_weights(state.positions[p], config);
    for (int c = 0; c < 27; ++c) {
      const int slot = grid.find(ws.stencils[p].node(c));
      if (slot < 0) throw std::invalid_argument("g2p: grid lacks a stencil node");
      ws.slots[p][c] = slot;
    }
  }
  return gather(state, config, -1, ws);
}

ParticleState substep(const ParticleState& state, const ParticleBody& body,
                      const std::vector<double>& mu,
                      const std::vector<double>& lambda,
                      const SimConfig& config) {
  Workspace ws;
  return run_substep(state, body, mu, lambda, config, -1, ws);
}

Tensor pack_state(const Tensor& positions, const Tensor& velocities) {
  const std::size_t n = positions.rank() == 2 ? positions.dim(0) : 0;
  if (positions.shape() != Shape{n, 3} || velocities.shape() != Shape{n, 3}) {
    throw ShapeError("pack_state: expected two (n, 3) tensors, got " +
                     shape_string(positions.shape()) + " and " +
                     shape_string(velocities.shape()));
  }
  Tensor eye({n, 9});
  for (std::size_t i = 0; i < n; ++i)
    for (int k : {0, 4, 8}) eye.set(9 * i + k, 1.0);
  return concat_last({positions, velocities, eye});
}

Tensor state_positions(const Tensor& state) { return slice_last(state, 0, 3); }
Tensor state_velocities(const Tensor& state) { return slice_last(state, 3, 6); }
Tensor state_deformation(const Tensor& state) { return slice_last(state, 6, 15); }

Tensor state_tensor(const ParticleState& state) {
  const std::size_t n = state.size();
  Tensor out({n, 15});
  auto d = out.mutable_data();
  for (std::size_t p = 0; p < n; ++p) {
    for (int k = 0; k < 3; ++k) {
      d[15 * p + k] = state.positions[p][k];
      d[15 * p + 3 + k] = state.velocities[p][k];
    }
    store_mat3(state.deformation[p], d.subspan(15 * p + 6, 9));
  }
  return out;
}

ParticleState particle_state(const Tensor& state) {
  if (state.rank() != 2 || state.dim(1) != 15) {
    throw ShapeError("particle_state: expected (n, 15), got " +
                     shape_string(state.shape()));
  }
  const std::size_t n = state.dim(0);
  ParticleState out;
  const auto d = state.data();
  for (std::size_t p = 0; p < n; ++p) {
    out.positions.emplace_back(d[15 * p], d[15 * p + 1], d[15 * p + 2]);
    out.velocities.emplace_back(d[15 * p + 3], d[15 * p + 4], d[15 * p + 5]);
    out.deformation.push_back(load_mat3(d.subspan(15 * p + 6, 9)));
  }
  return out;
}

namespace {

struct SubstepGrads {
  std::vector<Vec3> x, v;
  std::vector<Mat3> f;
  std::vector<double> mu, lambda;
};

// Adjoint of run_substep. `ws` holds the forward intermediates.
SubstepGrads substep_backward(const ParticleState& in, const ParticleBody& body,
                              std::span<const double> mu,
                              std::span<const double> lambda,
                              const SimConfig& config, const Workspace& ws,
                              std::span<const double> g_out) {
  const std::size_t n = in.size();
  const std::size_t nodes = ws.grid.nodes.size();
  const double dt = config.dt;
  SubstepGrads g;
  g.x.assign(n, Vec3::Zero());
  g.v.assign(n, Vec3::Zero());
  g.f.assign(n, Mat3::Zero());
  g.mu.assign(n, 0.0);
  g.lambda.assign(n, 0.0);

  std::vector<Vec3> g_vnode(nodes, Vec3::Zero());
  std::vector<std::array<double, 27>> g_w(n);
  std::vector<std::array<Vec3, 27>> g_dw(n);

  // g2p: x' = x + dt v', v' = sum w v_c, F' = s (I + dt G) F.
  for (std::size_t p = 0; p < n; ++p) {
    const Vec3 gx_out(g_out[15 * p], g_out[15 * p + 1], g_out[15 * p + 2]);
    const Vec3 gv_out =
        Vec3(g_out[15 * p + 3], g_out[15 * p + 4], g_out[15 * p + 5]) + dt * gx_out;
    const Mat3 gf_out = load_mat3(g_out.subspan(15 * p + 6, 9));
    g.x[p] += gx_out;

    const Mat3& ft = ws.f_trial[p];
    const double s = ws.clamp_scale[p];
    Mat3 g_ft = gf_out;
    if (s != 1.0) {
      const double inner = (gf_out.array() * ft.array()).sum();
      g_ft = s * gf_out - (s / 3.0) * inner * ft.inverse().transpose();
    }
    const Mat3 a = Mat3::Identity() + dt * ws.grad_v[p];
    g.f[p] += a.transpose() * g_ft;
    const Mat3 g_gv = dt * g_ft * in.deformation[p].transpose();

    const KernelStencil& st = ws.stencils[p];
    for (int c = 0; c < 27; ++c) {
      const int slot = ws.slots[p][c];
      const Vec3& vc = ws.grid.velocity[slot];
      const double w = st.weight(c);
      const Vec3 dw = st.gradient(c);
      g_vnode[slot] += w * gv_out + g_gv * dw;
      g_w[p][c] = vc.dot(gv_out);
      g_dw[p][c] = g_gv.transpose() * vc;
    }
  }

  // Grid update: v_c = (q_c + dt f_c) / m_c + dt g on free nodes.
  std::vector<double> g_mass(nodes, 0.0);
  std::vector<Vec3> g_mom(nodes, Vec3::Zero()), g_force(nodes, Vec3::Zero());
  for (std::size_t c = 0; c < nodes; ++c) {
    if (!ws.free_node[c]) continue;
    const double m = ws.grid.mass[c];
    const Vec3 num = ws.grid.momentum[c] + dt * ws.grid.force[c];
    g_mom[c] = g_vnode[c] / m;
    g_force[c] = dt * g_vnode[c] / m;
    g_mass[c] = -g_vnode[c].dot(num) / (m * m);
  }

  // p2g and internal forces.
  for (std::size_t p = 0; p < n; ++p) {
    const KernelStencil& st = ws.stencils[p];
    const double mp = body.mass[p], vol = body.volume[p];
    Mat3 g_stress = Mat3::Zero();
    for (int c = 0; c < 27; ++c) {
      const int slot = ws.slots[p][c];
      const double w = st.weight(c);
      const Vec3 dw = st.gradient(c);
      g_w[p][c] += mp * g_mass[slot] + mp * in.velocities[p].dot(g_mom[slot]);
      g.v[p] += w * mp * g_mom[slot];
      // f_c -= V P dw
      g_stress -= vol * g_force[slot] * dw.transpose();
      g_dw[p][c] -= vol * ws.stress[p].transpose() * g_force[slot];
    }
    for (int c = 0; c < 27; ++c) {
      g.x[p] += g_w[p][c] * st.gradient(c) + st.hessian(c) * g_dw[p][c];
    }
    const StressGradient sg =
        first_pk_stress_backward(in.deformation[p], mu[p], lambda[p], g_stress);
    g.f[p] += sg.f;
    g.mu[p] += sg.mu;
    g.lambda[p] += sg.lambda;
  }
  return g;
}

}  // namespace

Tensor substep(const Tensor& state, const Tensor& mu, const Tensor& lambda,
               std::shared_ptr<const ParticleBody> body,
               const SimConfig& config, long step) {
  const std::size_t n = state.rank() == 2 ? state.dim(0) : 0;
  if (state.shape() != Shape{n, 15} || mu.shape() != Shape{n} ||
      lambda.shape() != Shape{n}) {
    throw ShapeError("substep: expected (n, 15), (n), (n), got " +
                     shape_string(state.shape()) + ", " +
                     shape_string(mu.shape()) + ", " +
                     shape_string(lambda.shape()));
  }
  auto in = std::make_shared<const ParticleState>(particle_state(state));
  Workspace ws;
  const ParticleState out =
      run_substep(*in, *body, mu.data(), lambda.data(), config, step, ws);
  if (!state.attached() && !mu.attached() && !lambda.attached()) {
    return state_tensor(out);
  }
  auto mv = std::make_shared<const std::vector<double>>(mu.values());
  auto lv = std::make_shared<const std::vector<double>>(lambda.values());
  return record_op(
      "substep", state_tensor(out), {&state, &mu, &lambda},
      [in, mv, lv, body, config, step, n](std::span<const double> g,
                                          std::span<const std::span<double>> gin) {
        Workspace ws;
        run_substep(*in, *body, *mv, *lv, config, step, ws);
        const SubstepGrads sg = substep_backward(*in, *body, *mv, *lv, config, ws, g);
        for (std::size_t p = 0; p < n; ++p) {
          if (!gin[0].empty()) {
            for (int k = 0; k < 3; ++k) {
              gin[0][15 * p + k] += sg.x[p][k];
              gin[0][15 * p + 3 + k] += sg.v[p][k];
            }
            add_mat3(sg.f[p], gin[0].subspan(15 * p + 6, 9));
          }
          if (!gin[1].empty()) gin[1][p] += sg.mu[p];
          if (!gin[2].empty()) gin[2][p] += sg.lambda[p];
        }
      });
}

std::vector<Tensor> rollout(const Tensor& state, const Tensor& mu,
                            const Tensor& lambda,
                            std::shared_ptr<const ParticleBody> body,
                            const SimConfig& config, int frames) {
  config.validate();
  if (frames < 1) throw std::invalid_argument("rollout: frames < 1");
  std::vector<Tensor> out{state};
  Tensor s = state;
  long step = 0;
  for (int f = 1; f < frames; ++f) {
    for (int k = 0; k < config.substeps_per_frame; ++k) {
      s = substep(s, mu, lambda, body, config, step++);
    }
    out.push_back(s);
  }
  return out;
}

Vec3 total_momentum(const ParticleState& state, const ParticleBody& body) {
  Vec3 q = Vec3::Zero();
  for (std::size_t p = 0; p < state.size(); ++p) q += body.mass[p] * state.velocities[p];
  return q;
}

double kinetic_energy(const ParticleState& state, const ParticleBody& body) {
  double e = 0.0;
  for (std::size_t p = 0; p < state.size(); ++p) {
    e += 0.5 * body.mass[p] * state.velocities[p].squaredNorm();
  }
  return e;
}

double elastic_energy(const ParticleState& state, const ParticleBody& body,
                      const std::vector<double>& mu,
                      const std::vector<double>& lambda) {
  double e = 0.0;
  for (std::size_t p = 0; p < state.size(); ++p) {
    e += body.volume[p] * corotated_energy(state.deformation[p], mu[p], lambda[p]);
  }
  return e;
}

Vec3 center_of_mass(const ParticleState& state, const ParticleBody& body) {
  Vec3 c = Vec3::Zero();
  double m = 0.0;
  for (std::size_t p = 0; p < state.size(); ++p) {
    c += body.mass[p] * state.positions[p];
    m += body.mass[p];
  }
  return m > 0.0 ? Vec3(c / m) : c;
}

void write_snapshot(const std::string& path, const ParticleState& state) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  out.precision(17);
  out << "# index x y z vx vy vz\n";
  for (std::size_t p = 0; p < state.size(); ++p) {
    const Vec3& x = state.positions[p];
    const Vec3& v = state.velocities[p];
    out << p << ' ' << x.x() << ' ' << x.y() << ' ' << x.z() << ' ' << v.x()
        << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

}  // namespace splatphys
