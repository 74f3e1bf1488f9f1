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


// Image metrics, clustering and segmentation scoring.

#ifndef SPLATPHYS_METRICS_HPP_
#define SPLATPHYS_METRICS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "splatphys/image.hpp"
#include "splatphys/tensor.hpp"

namespace splatphys {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) over all channels, capped at 99 dB.
double psnr(const Image& a, const Image& b);
double psnr(std::span<const double> a, std::span<const double> b);

// Mean SSIM of the luminance (0.299 R + 0.587 G + 0.114 B) over the valid
// region of an 11 x 11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2. Throws std::invalid_argument when the image is smaller than
// the window.
double ssim(const Image& a, const Image& b);

// Differentiable SSIM of an (h, w, 3) prediction against a fixed target.
Tensor ssim_tensor(const Tensor& prediction, const Image& target);

// (1 - lambda) L1 + lambda (1 - SSIM).
Tensor rendering_loss(const Tensor& prediction, const Image& target,
                      double lambda_ssim);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  std::vector<double> inertia;  // after each Lloyd iteration
  int iterations = 0;
};

// Lloyd iterations from a k-means++ start. Stops when assignments repeat or
// after 300 iterations. An emptied cluster is re-seeded with the point
// farthest from its centroid. Throws std::logic_error if the inertia ever
// increases.
KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    int clusters, std::uint64_t seed);

// Minimum-cost assignment on a rows x cols cost matrix (rows <= cols).
// Returns the column of each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

struct SegmentationScores {
  double miou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Predicted clusters are matched one-to-one to ground-truth classes by
// maximizing total IoU. Scores are averaged over ground-truth classes; an
// unmatched class scores zero.
SegmentationScores segmentation_scores(const std::vector<int>& predicted,
                                       const std::vector<int>& truth);

// Columns rescaled to zero mean and unit variance; constant columns become
// zero.
std::vector<std::vector<double>> standardize(
    std::vector<std::vector<double>> features);

// `count` evenly spaced times covering [t0, t1] inclusive.
std::vector<double> uniform_timestamps(double t0, double t1, int count);

}  // namespace splatphys

#endif  // SPLATPHYS_METRICS_HPP_
