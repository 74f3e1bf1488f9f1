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

// Canonical (t = 0) Gaussian scene: primitives, cameras and covariance math.

#ifndef SPLATPHYS_GAUSSIAN_SCENE_HPP_
#define SPLATPHYS_GAUSSIAN_SCENE_HPP_

#include <string>
#include <vector>

#include "splatphys/linalg.hpp"
#include "splatphys/tensor.hpp"

namespace splatphys {

// Unit quaternion (w, x, y, z).
using Quat = Eigen::Vector4d;

inline Quat identity_quat() { return Quat(1.0, 0.0, 0.0, 0.0); }
// Rotation of `angle` radians about a unit `axis`.
Quat axis_angle_quat(const Vec3& axis, double angle);
// Rotation matrix of q / |q|. Throws std::invalid_argument for q = 0.
Mat3 quat_to_rotation(const Quat& q);

// Number of color coefficients per channel for an SH degree (0 or 1).
inline int sh_coeffs_per_channel(int degree) { return degree == 0 ? 1 : 4; }

struct GaussianParticle {
  Vec3 position = Vec3::Zero();
  Quat rotation = identity_quat();
  Vec3 log_scale = Vec3::Zero();
  double opacity_logit = 0.0;
  // Channel-major SH coefficients: rgb for degree 0, 3 x 4 for degree 1.
  std::vector<double> color = {0.0, 0.0, 0.0};

  double mass = 1.0;
  double rest_volume = 1.0;
  Vec3 velocity = Vec3::Zero();
  Mat3 deformation = Mat3::Identity();

  double opacity() const;
  Vec3 scale() const { return log_scale.array().exp(); }
};

struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  double volume() const { return (hi - lo).prod(); }
};

struct Scene {
  std::vector<GaussianParticle> particles;
  Aabb bounds;
  int sh_degree = 0;

  std::size_t size() const { return particles.size(); }
  // Throws std::invalid_argument when a particle violates the invariants
  // (position outside bounds, non-finite values, wrong color width).
  void validate() const;
  // Renormalizes every quaternion.
  void normalize_rotations();
  // Mass m = density * V0 with V0 = body_volume / particle count.
  void assign_mass(double density, double body_volume);
};

struct Camera {
  Mat4 world_to_camera = Mat4::Identity();
  double fx = 64.0;
  double fy = 64.0;
  double cx = 32.0;
  double cy = 32.0;
  int width = 64;
  int height = 64;

  Mat3 rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  Vec3 center() const { return -rotation().transpose() * translation(); }
  Vec3 to_camera(const Vec3& world) const {
    return rotation() * world + translation();
  }

  // Camera at `eye` looking at `target`; +y in the image points down, the
  // camera looks along +z. `fov_y` in radians.
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                        double fov_y, int width, int height);
  // Throws std::invalid_argument if the rotation block is not orthonormal
  // within 1e-9 or the image is empty.
  void validate() const;
};

// Cameras evenly spaced on a horizontal ring around `target`.
std::vector<Camera> camera_ring(int count, double radius, double height,
                                const Vec3& target, double fov_y, int width,
                                int height_px);

// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
Mat3 covariance_from_rs(const Quat& q, const Vec3& log_scale);

// exp(-0.5 (x - p)^T Sigma^-1 (x - p)); 1 at the center.
double evaluate_gaussian(const GaussianParticle& g, const Vec3& x);

inline constexpr double kNearPlane = 0.01;

struct Projection {
  bool culled = true;
  Vec2 center = Vec2::Zero();  // pixel coordinates
  Mat2 covariance = Mat2::Zero();
  double depth = 0.0;          // camera-space z
};

// Perspective projection of a world-space Gaussian: J W Sigma W^T J^T with J
// the projection Jacobian at the camera-space center. Points at or behind
// the near plane come back with `culled` set.
Projection project_covariance(const Mat3& sigma, const Camera& camera,
                              const Vec3& position);
// Same product for an explicit Jacobian and view rotation.
Mat2 project_covariance(const Mat3& sigma, const Mat3& view_rotation,
                        const Mat23& jacobian);
Mat23 projection_jacobian(const Camera& camera, const Vec3& camera_point);

// Tensor views of a scene used by the differentiable pipeline.
struct GaussianTensors {
  Tensor positions;       // (n, 3)
  Tensor rotations;       // (n, 4)
  Tensor log_scales;      // (n, 3)
  Tensor opacity_logits;  // (n)
  Tensor colors;          // (n, 3 * coeffs)
};
GaussianTensors scene_tensors(const Scene& scene);
// Copies tensor values back into the scene (detached).
void apply_tensors(const GaussianTensors& t, Scene& scene);

}  // namespace splatphys

#endif  // SPLATPHYS_GAUSSIAN_SCENE_HPP_
