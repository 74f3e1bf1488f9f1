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


#include "splatphys/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "splatphys/gradcheck.hpp"
#include "splatphys/ops.hpp"

namespace splatphys {
namespace {

Image random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image im(w, h);
  for (double& v : im.rgb) v = u(rng);
  return im;
}

Image smooth_image(int w, int h, double phase) {
  Image im(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        im.at(x, y, c) = 0.5 + 0.4 * std::sin(0.3 * x + 0.2 * y + phase + c);
      }
    }
  }
  return im;
}

TEST(PsnrTest, IdenticalImagesHitTheCap) {
  const Image a = random_image(16, 12, 1);
  EXPECT_DOUBLE_EQ(psnr(a, a), kPsnrCap);
}

TEST(PsnrTest, KnownMse) {
  Image a(4, 4), b(4, 4);
  for (double& v : b.rgb) v = 0.1;  // MSE 0.01 -> 20 dB
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
}

TEST(PsnrTest, SymmetricAndMonotoneInNoise) {
  const Image a = random_image(20, 20, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  double previous = kPsnrCap + 1.0;
  for (double sigma : {1e-3, 1e-2, 1e-1}) {
    Image b = a;
    std::mt19937_64 r2(4);
    for (double& v : b.rgb) v += sigma * n(r2);
    EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
    EXPECT_LT(psnr(a, b), previous);
    previous = psnr(a, b);
  }
}

TEST(SsimTest, IdentitySymmetryAndRange) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image a = random_image(24, 20, seed);
    const Image b = random_image(24, 20, seed + 100);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_LE(ssim(a, b), 1.0);
    EXPECT_GE(ssim(a, b), -1.0);
  }
}

TEST(SsimTest, DecreasesWithDistortion) {
  const Image a = smooth_image(32, 32, 0.0);
  EXPECT_GT(ssim(a, smooth_image(32, 32, 0.1)), ssim(a, smooth_image(32, 32, 0.5)));
}

TEST(SsimTest, RejectsImagesSmallerThanWindow) {
  EXPECT_THROW(ssim(Image(10, 30), Image(10, 30)), std::invalid_argument);
}

TEST(SsimTest, TensorValueMatchesImageValue) {
  const Image a = random_image(16, 14, 5);
  const Image b = random_image(16, 14, 6);
  EXPECT_NEAR(ssim_tensor(a.to_tensor(), b).item(), ssim(a, b), 1e-14);
}

TEST(SsimTest, GradientMatchesFiniteDifferences) {
  const Image target = smooth_image(13, 12, 0.3);
  const Image start = random_image(13, 12, 7);
  const auto f = [&](const std::vector<Tensor>& in) {
    return ssim_tensor(in[0], target);
  };
  const auto r = check_gradients(f, {start.to_tensor()}, 1e-6);
  EXPECT_LT(r.relative_error, 1e-6);
}

TEST(SsimTest, RenderingLossGradient) {
  const Image target = smooth_image(12, 12, 0.7);
  const Image start = smooth_image(12, 12, 0.2);
  const auto f = [&](const std::vector<Tensor>& in) {
    return rendering_loss(in[0], target, 0.2);
  };
  EXPECT_LT(check_gradients(f, {start.to_tensor()}, 1e-6).relative_error, 1e-6);
  EXPECT_NEAR(rendering_loss(target.to_tensor(), target, 0.2).item(), 0.0, 1e-12);
}

TEST(SsimTest, ConstantOffsetL1) {
  const Image target = smooth_image(16, 16, 0.1);
  Image pred = target;
  for (double& v : pred.rgb) v += 0.1;
  EXPECT_NEAR(rendering_loss(pred.to_tensor(), target, 0.0).item(), 0.1, 1e-12);
  EXPECT_THROW(rendering_loss(pred.to_tensor(), Image(15, 16), 0.2), ShapeError);
}

std::vector<std::vector<double>> blobs(std::uint64_t seed, int per_blob,
                                       std::vector<int>* truth) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  const double centers[3][2] = {{0, 0}, {5, 0}, {0, 5}};
  std::vector<std::vector<double>> pts;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_blob; ++i) {
      pts.push_back({centers[c][0] + n(rng), centers[c][1] + n(rng)});
      if (truth) truth->push_back(c);
    }
  }
  return pts;
}

TEST(KMeansTest, SeparatedBlobsAreRecovered) {
  std::vector<int> truth;
  const auto pts = blobs(1, 40, &truth);
  const auto r = kmeans(pts, 3, 9);
  EXPECT_DOUBLE_EQ(segmentation_scores(r.labels, truth).miou, 1.0);
}

TEST(KMeansTest, InertiaNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = blobs(seed, 15, nullptr);
    const auto r = kmeans(pts, 5, seed);
    for (std::size_t i = 1; i < r.inertia.size(); ++i) {
      EXPECT_LE(r.inertia[i], r.inertia[i - 1] * (1 + 1e-12));
    }
  }
}

TEST(KMeansTest, DeterministicForSeed) {
  const auto pts = blobs(4, 20, nullptr);
  EXPECT_EQ(kmeans(pts, 4, 11).labels, kmeans(pts, 4, 11).labels);
}

TEST(KMeansTest, DuplicatePointsKeepEveryClusterNonEmpty) {
  std::vector<std::vector<double>> pts(10, {1.0, 1.0});
  pts.push_back({2.0, 2.0});
  pts.push_back({3.0, 3.0});
  const auto r = kmeans(pts, 3, 0);
  std::vector<int> counts(3, 0);
  for (int l : r.labels) ++counts[l];
  for (int c : counts) EXPECT_GT(c, 0);
}

TEST(KMeansTest, RejectsBadInput) {
  EXPECT_THROW(kmeans({{1.0}}, 2, 0), std::invalid_argument);
  EXPECT_THROW(kmeans({{1.0}, {1.0, 2.0}}, 1, 0), std::invalid_argument);
}

TEST(SsimTest, NegativeImageScoresBelowOne) {
  const Image a = smooth_image(20, 20, 0.4);
  Image b = a;
  for (double& v : b.rgb) v = 1.0 - v;
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(SsimTest, ConstantPairScoresOne) {
  Image a(16, 16);
  for (double& v : a.rgb) v = 0.5;
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(KMeansTest, OneDimensionalPairs) {
  const auto r = kmeans({{0.0}, {0.1}, {10.0}, {10.1}}, 2, 3);
  EXPECT_EQ(r.labels[0], r.labels[1]);
  EXPECT_EQ(r.labels[2], r.labels[3]);
  EXPECT_NE(r.labels[0], r.labels[2]);
}

TEST(KMeansTest, OneClusterPerPoint) {
  const auto pts = blobs(2, 3, nullptr);
  const auto r = kmeans(pts, static_cast<int>(pts.size()), 5);
  EXPECT_DOUBLE_EQ(r.inertia.back(), 0.0);
}

TEST(KMeansTest, TenSigmaBlobsOverTwentySeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::vector<double>> pts;
    std::vector<int> truth;
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < 30; ++i) {
        pts.push_back({10.0 * c + n(rng), (c == 1 ? 10.0 : 0.0) + n(rng)});
        truth.push_back(c);
      }
    }
    EXPECT_DOUBLE_EQ(segmentation_scores(kmeans(pts, 3, seed).labels, truth).miou, 1.0)
        << "seed " << seed;
  }
}

TEST(HungarianTest, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (auto& row : cost) {
      for (double& c : row) c = u(rng);
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += cost[i][perm[i]];
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto a = hungarian(cost);
    double got = 0.0;
    for (int i = 0; i < n; ++i) got += cost[i][a[i]];
    EXPECT_NEAR(got, best, 1e-12);
  }
}

TEST(SegmentationTest, PerfectUpToRelabeling) {
  const std::vector<int> truth = {0, 0, 1, 1, 2, 2};
  const std::vector<int> pred = {7, 7, 3, 3, 5, 5};
  const auto s = segmentation_scores(pred, truth);
  EXPECT_DOUBLE_EQ(s.miou, 1.0);
  EXPECT_DOUBLE_EQ(s.f1, 1.0);
}

TEST(SegmentationTest, HalfWrongBinaryPrediction) {
  // Each predicted cluster holds half of each true class.
  const std::vector<int> truth = {0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<int> pred = {0, 0, 1, 1, 0, 0, 1, 1};
  EXPECT_NEAR(segmentation_scores(pred, truth).miou, 1.0 / 3.0, 1e-12);
}

TEST(SegmentationTest, MissingClassScoresZero) {
  const std::vector<int> truth = {0, 0, 1, 1};
  const std::vector<int> pred = {0, 0, 0, 0};
  const auto s = segmentation_scores(pred, truth);
  EXPECT_NEAR(s.miou, 0.25, 1e-12);
  EXPECT_NEAR(s.recall, 0.5, 1e-12);
}

TEST(SegmentationTest, ScoresWithinUnitInterval) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> label(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> truth(40), pred(40);
    for (int i = 0; i < 40; ++i) {
      truth[i] = label(rng);
      pred[i] = label(rng);
    }
    const auto s = segmentation_scores(pred, truth);
    for (double v : {s.miou, s.precision, s.recall, s.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(StandardizeTest, ZeroMeanUnitVariance) {
  auto f = standardize({{1.0, 5.0, 2.0}, {3.0, 5.0, 4.0}, {8.0, 5.0, 9.0}});
  for (int j = 0; j < 3; ++j) {
    double m = 0.0, v = 0.0;
    for (const auto& r : f) m += r[j];
    for (const auto& r : f) v += r[j] * r[j];
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 3.0, j == 1 ? 0.0 : 1.0, 1e-12);
  }
}

TEST(TimestampTest, EndpointsIncluded) {
  const auto t = uniform_timestamps(0.0, 1.8, 10);
  ASSERT_EQ(t.size(), 10u);
  EXPECT_DOUBLE_EQ(t.front(), 0.0);
  EXPECT_DOUBLE_EQ(t.back(), 1.8);
}

}  // namespace
}  // namespace splatphys
