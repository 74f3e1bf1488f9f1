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

// Depth-sorted alpha compositing of projected Gaussians.
//
// Every pixel composites C = sum_i c_i a_i prod_{j<i} (1 - a_j) over the
// particles sorted by camera-space depth (ties by index), with
// a_i = min(sigmoid(opacity_i) * exp(-d^T Sigma'^-1 d / 2), 0.999) and d the
// offset from the projected center. Pixel (x, y) has its center at integer
// coordinates (x, y). The background is black.

#ifndef SPLATPHYS_SPLAT_RENDERER_HPP_
#define SPLATPHYS_SPLAT_RENDERER_HPP_

#include <optional>
#include <vector>

#include "splatphys/gaussian_scene.hpp"
#include "splatphys/image.hpp"
#include "splatphys/tensor.hpp"

namespace splatphys {

struct RenderOptions {
  // Render F Sigma F^T instead of Sigma when a deformation is supplied.
  bool deform_covariance = true;
  double alpha_clamp = 0.999;
  int tile_size = 16;
  // The tiled path skips a particle wherever its alpha is provably below
  // this value. Zero disables culling.
  double alpha_cutoff = 1e-13;
};

// Simulated state of each particle at some time.
struct Deformation {
  std::vector<Vec3> positions;
  std::vector<Mat3> gradients;
};

// Differentiable covariance_from_rs over (n, 4) quaternions and (n, 3)
// log-scales; returns (n, 9) row-major covariances.
Tensor covariance_tensor(const Tensor& rotations, const Tensor& log_scales);

// Per-particle RGB in (0, 1): sigmoid of the SH expansion evaluated toward
// the camera. `coeffs` is (n, 3) for degree 0 or (n, 12) for degree 1.
Tensor sh_colors(const Tensor& coeffs, const Tensor& positions,
                 const Vec3& camera_center, int degree);

// Fused projection + compositing. positions (n, 3), covariances (n, 9),
// opacity logits (n), rgb (n, 3). Returns an (h, w, 3) image tensor.
Tensor rasterize(const Tensor& positions, const Tensor& covariances,
                 const Tensor& opacity_logits, const Tensor& rgb,
                 const Camera& camera, const RenderOptions& options = {});

// Full differentiable path from Gaussian attributes. `positions` and
// `deformation` (n, 9) override the canonical state when given.
Tensor render(const GaussianTensors& gaussians, int sh_degree,
              const Camera& camera, const Tensor* positions = nullptr,
              const Tensor* deformation = nullptr,
              const RenderOptions& options = {});

Image render(const Scene& scene, const Camera& camera,
             const Deformation* deformation = nullptr,
             const RenderOptions& options = {});

// Reference evaluation over every particle for every pixel; no tiling, no
// culling radius.
Image render_bruteforce(const Scene& scene, const Camera& camera,
                        const Deformation* deformation = nullptr,
                        const RenderOptions& options = {});

// Renders integer labels: each pixel gets 1 + the label of the particle
// with the largest compositing weight, 0 where the accumulated opacity is
// below `min_alpha`.
std::vector<int> render_labels(const Scene& scene, const Camera& camera,
                               const std::vector<int>& labels,
                               const Deformation* deformation = nullptr,
                               double min_alpha = 0.5);

}  // namespace splatphys

#endif  // SPLATPHYS_SPLAT_RENDERER_HPP_
