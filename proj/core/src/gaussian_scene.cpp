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

#include "splatphys/gaussian_scene.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace splatphys {

Quat axis_angle_quat(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized();
  const double s = std::sin(0.5 * angle);
  return Quat(std::cos(0.5 * angle), s * a.x(), s * a.y(), s * a.z());
}

Mat3 quat_to_rotation(const Quat& q) {
  const double n = q.norm();
  if (!(n > 0.0)) {
    throw std::invalid_argument("quat_to_rotation: zero quaternion");
  }
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

double GaussianParticle::opacity() const {
  return 1.0 / (1.0 + std::exp(-opacity_logit));
}

void Scene::validate() const {
  const std::size_t width = 3 * sh_coeffs_per_channel(sh_degree);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto& p = particles[i];
    std::ostringstream err;
    if (!bounds.contains(p.position)) {
      err << "particle " << i << " at (" << p.position.transpose()
          << ") lies outside the scene bounds";
    } else if (p.color.size() != width) {
      err << "particle " << i << " has " << p.color.size()
          << " color coefficients, expected " << width;
    } else if (!p.position.allFinite() || !p.rotation.allFinite() ||
               !p.log_scale.allFinite() || !std::isfinite(p.opacity_logit)) {
      err << "particle " << i << " has non-finite attributes";
    } else if (p.rotation.norm() == 0.0) {
      err << "particle " << i << " has a zero quaternion";
    }
    if (!err.str().empty()) throw std::invalid_argument("Scene: " + err.str());
  }
}

void Scene::normalize_rotations() {
  for (auto& p : particles) p.rotation.normalize();
}

void Scene::assign_mass(double density, double body_volume) {
  if (particles.empty()) return;
  const double v0 = body_volume / static_cast<double>(particles.size());
  for (auto& p : particles) {
    p.rest_volume = v0;
    p.mass = density * v0;
  }
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                       double fov_y, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 rot;
  rot.row(0) = right.transpose();
  rot.row(1) = down.transpose();
  rot.row(2) = forward.transpose();
  Camera cam;
  cam.world_to_camera.setIdentity();
  cam.world_to_camera.topLeftCorner<3, 3>() = rot;
  cam.world_to_camera.topRightCorner<3, 1>() = -rot * eye;
  cam.fy = 0.5 * height / std::tan(0.5 * fov_y);
  cam.fx = cam.fy;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  return cam;
}

void Camera::validate() const {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("Camera: empty image size");
  }
  const Mat3 r = rotation();
  if (((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("Camera: rotation block is not orthonormal");
  }
}

std::vector<Camera> camera_ring(int count, double radius, double height,
                                const Vec3& target, double fov_y, int width,
                                int height_px) {
  std::vector<Camera> cams;
  cams.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * i / count;
    const Vec3 eye = target + Vec3(radius * std::cos(a), height,
                                   radius * std::sin(a));
    cams.push_back(Camera::look_at(eye, target, Vec3::UnitY(), fov_y, width,
                                   height_px));
  }
  return cams;
}

Mat3 covariance_from_rs(const Quat& q, const Vec3& log_scale) {
  const Mat3 r = quat_to_rotation(q);
  const Vec3 s2 = (2.0 * log_scale).array().exp();
  const Mat3 sigma = r * s2.asDiagonal() * r.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

double evaluate_gaussian(const GaussianParticle& g, const Vec3& x) {
  const Mat3 sigma = covariance_from_rs(g.rotation, g.log_scale);
  const Vec3 d = x - g.position;
  if (d.isZero(0.0)) return 1.0;
  return std::exp(-0.5 * d.dot(sigma.ldlt().solve(d)));
}

Mat23 projection_jacobian(const Camera& camera, const Vec3& t) {
  Mat23 j;
  const double iz = 1.0 / t.z();
  j << camera.fx * iz, 0.0, -camera.fx * t.x() * iz * iz, 0.0, camera.fy * iz,
      -camera.fy * t.y() * iz * iz;
  return j;
}

Mat2 project_covariance(const Mat3& sigma, const Mat3& view_rotation,
                        const Mat23& jacobian) {
  const Mat23 t = jacobian * view_rotation;
  const Mat2 out = t * sigma * t.transpose();
  return 0.5 * (out + out.transpose());
}

Projection project_covariance(const Mat3& sigma, const Camera& camera,
                              const Vec3& position) {
  Projection proj;
  const Vec3 t = camera.to_camera(position);
  proj.depth = t.z();
  if (!(t.z() > kNearPlane)) return proj;
  proj.culled = false;
  proj.center = Vec2(camera.fx * t.x() / t.z() + camera.cx,
                     camera.fy * t.y() / t.z() + camera.cy);
  proj.covariance = project_covariance(sigma, camera.rotation(),
                                       projection_jacobian(camera, t));
  return proj;
}

GaussianTensors scene_tensors(const Scene& scene) {
  const std::size_t n = scene.size();
  const std::size_t cw = 3 * sh_coeffs_per_channel(scene.sh_degree);
  std::vector<double> pos(3 * n), rot(4 * n), ls(3 * n), op(n), col(cw * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = scene.particles[i];
    for (int k = 0; k < 3; ++k) {
      pos[3 * i + k] = p.position[k];
      ls[3 * i + k] = p.log_scale[k];
    }
    for (int k = 0; k < 4; ++k) rot[4 * i + k] = p.rotation[k];
    op[i] = p.opacity_logit;
    for (std::size_t k = 0; k < cw; ++k) col[cw * i + k] = p.color[k];
  }
  return GaussianTensors{Tensor({n, 3}, std::move(pos)),
                         Tensor({n, 4}, std::move(rot)),
                         Tensor({n, 3}, std::move(ls)),
                         Tensor({n}, std::move(op)),
                         Tensor({n, cw}, std::move(col))};
}

void apply_tensors(const GaussianTensors& t, Scene& scene) {
  const std::size_t n = scene.size();
  const std::size_t cw = 3 * sh_coeffs_per_channel(scene.sh_degree);
  if (t.positions.size() != 3 * n || t.colors.size() != cw * n) {
    throw ShapeError("apply_tensors: tensor sizes do not match the scene");
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = scene.particles[i];
    for (int k = 0; k < 3; ++k) {
      p.position[k] = t.positions[3 * i + k];
      p.log_scale[k] = t.log_scales[3 * i + k];
    }
    for (int k = 0; k < 4; ++k) p.rotation[k] = t.rotations[4 * i + k];
    p.opacity_logit = t.opacity_logits[i];
    p.color.assign(t.colors.values().begin() + static_cast<std::ptrdiff_t>(cw * i),
                   t.colors.values().begin() + static_cast<std::ptrdiff_t>(cw * (i + 1)));
  }
}

}  // namespace splatphys
