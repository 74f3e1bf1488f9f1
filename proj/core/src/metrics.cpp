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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "splatphys/ops.hpp"

namespace splatphys {

double psnr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("psnr: size mismatch");
  }
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw std::invalid_argument("psnr: image size mismatch");
  return psnr(std::span<const double>(a.rgb), std::span<const double>(b.rgb));
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kLuma[3] = {0.299, 0.587, 0.114};

const std::array<double, kWindow>& window_taps() {
  static const std::array<double, kWindow> taps = [] {
    std::array<double, kWindow> t{};
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - kWindow / 2;
      t[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      total += t[i];
    }
    for (double& v : t) v /= total;
    return t;
  }();
  return taps;
}

std::vector<double> luminance(std::span<const double> rgb) {
  std::vector<double> y(rgb.size() / 3);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = kLuma[0] * rgb[3 * i] + kLuma[1] * rgb[3 * i + 1] +
           kLuma[2] * rgb[3 * i + 2];
  }
  return y;
}

// Valid-region correlation with the separable window: (h, w) -> (h-10, w-10).
std::vector<double> filter(const std::vector<double>& x, int w, int h) {
  const auto& k = window_taps();
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x0 = 0; x0 < ow; ++x0) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * x[y * w + x0 + i];
      rows[y * ow + x0] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y0 = 0; y0 < oh; ++y0) {
    for (int x0 = 0; x0 < ow; ++x0) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * rows[(y0 + i) * ow + x0];
      out[y0 * ow + x0] = s;
    }
  }
  return out;
}

// Adjoint of `filter`: (h-10, w-10) -> (h, w).
std::vector<double> filter_adjoint(const std::vector<double>& g, int w, int h) {
  const auto& k = window_taps();
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y0 = 0; y0 < oh; ++y0) {
    for (int x0 = 0; x0 < ow; ++x0) {
      const double v = g[y0 * ow + x0];
      for (int i = 0; i < kWindow; ++i) rows[(y0 + i) * ow + x0] += k[i] * v;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x0 = 0; x0 < ow; ++x0) {
      const double v = rows[y * ow + x0];
      for (int i = 0; i < kWindow; ++i) out[y * w + x0 + i] += k[i] * v;
    }
  }
  return out;
}

struct SsimMaps {
  double value = 0.0;
  // Per-window derivatives of the mean SSIM w.r.t. mu_x, E[x^2], E[xy].
  std::vector<double> d_mu, d_xx, d_xy;
};

SsimMaps ssim_maps(const std::vector<double>& x, const std::vector<double>& y,
                   int w, int h, bool with_grad) {
  if (w < kWindow || h < kWindow) {
    throw std::invalid_argument("ssim: image smaller than the " +
                                std::to_string(kWindow) + "-pixel window");
  }
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter(x, w, h);
  const auto my = filter(y, w, h);
  const auto exx = filter(xx, w, h);
  const auto eyy = filter(yy, w, h);
  const auto exy = filter(xy, w, h);
  const std::size_t m = mx.size();
  const double inv_m = 1.0 / static_cast<double>(m);

  SsimMaps out;
  if (with_grad) {
    out.d_mu.assign(m, 0.0);
    out.d_xx.assign(m, 0.0);
    out.d_xy.assign(m, 0.0);
  }
  double total = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    const double sxx = exx[p] - mx[p] * mx[p];
    const double syy = eyy[p] - my[p] * my[p];
    const double sxy = exy[p] - mx[p] * my[p];
    const double a1 = 2.0 * mx[p] * my[p] + kC1;
    const double a2 = 2.0 * sxy + kC2;
    const double b1 = mx[p] * mx[p] + my[p] * my[p] + kC1;
    const double b2 = sxx + syy + kC2;
    const double s = a1 * a2 / (b1 * b2);
    total += s;
    if (with_grad) {
      out.d_mu[p] = inv_m * s *
                    (2.0 * my[p] / a1 - 2.0 * my[p] / a2 - 2.0 * mx[p] / b1 +
                     2.0 * mx[p] / b2);
      out.d_xx[p] = -inv_m * s / b2;
      out.d_xy[p] = inv_m * s * 2.0 / a2;
    }
  }
  out.value = total * inv_m;
  return out;
}

void check_image_tensor(const Tensor& t, const Image& target, const char* op) {
  if (t.rank() != 3 || t.dim(2) != 3 ||
      t.dim(0) != static_cast<std::size_t>(target.height) ||
      t.dim(1) != static_cast<std::size_t>(target.width)) {
    throw ShapeError(std::string(op) + ": prediction " + shape_string(t.shape()) +
                     " does not match a " + std::to_string(target.height) + "x" +
                     std::to_string(target.width) + " target");
  }
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw std::invalid_argument("ssim: image size mismatch");
  return ssim_maps(luminance(a.rgb), luminance(b.rgb), a.width, a.height, false)
      .value;
}

Tensor ssim_tensor(const Tensor& prediction, const Image& target) {
  check_image_tensor(prediction, target, "ssim_tensor");
  const int w = target.width;
  const int h = target.height;
  auto x = std::make_shared<std::vector<double>>(luminance(prediction.data()));
  auto y = std::make_shared<const std::vector<double>>(luminance(target.rgb));
  const bool taped = prediction.attached();
  auto maps = std::make_shared<SsimMaps>(ssim_maps(*x, *y, w, h, taped));
  Tensor out = Tensor::scalar(maps->value);
  return record_op(
      "ssim", std::move(out), {&prediction},
      [x, y, maps, w, h](std::span<const double> g,
                         std::span<const std::span<double>> gin) {
        if (gin[0].empty()) return;
        const auto gmu = filter_adjoint(maps->d_mu, w, h);
        const auto gxx = filter_adjoint(maps->d_xx, w, h);
        const auto gxy = filter_adjoint(maps->d_xy, w, h);
        for (std::size_t i = 0; i < x->size(); ++i) {
          const double gl =
              g[0] * (gmu[i] + 2.0 * (*x)[i] * gxx[i] + (*y)[i] * gxy[i]);
          for (int c = 0; c < 3; ++c) gin[0][3 * i + c] += kLuma[c] * gl;
        }
      });
}

Tensor rendering_loss(const Tensor& prediction, const Image& target,
                      double lambda_ssim) {
  check_image_tensor(prediction, target, "rendering_loss");
  const Tensor l1 = mean(abs(sub(prediction, target.to_tensor())));
  if (lambda_ssim == 0.0) return l1;
  const Tensor dssim = add_scalar(neg(ssim_tensor(prediction, target)), 1.0);
  return add(scale(l1, 1.0 - lambda_ssim), scale(dssim, lambda_ssim));
}

namespace {

double squared_distance(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    int clusters, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (clusters < 1) throw std::invalid_argument("kmeans: k must be positive");
  if (n < static_cast<std::size_t>(clusters)) {
    throw std::invalid_argument("kmeans: fewer points than clusters");
  }
  const std::size_t d = points[0].size();
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("kmeans: ragged features");
  }
  const std::size_t k = static_cast<std::size_t>(clusters);

  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centroids.reserve(k);
  r.centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (r.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], r.centroids.back()));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      pick = std::discrete_distribution<std::size_t>(nearest.begin(), nearest.end())(rng);
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    r.centroids.push_back(points[pick]);
  }

  constexpr int kMaxIterations = 300;
  r.labels.assign(n, -1);
  std::vector<double> dist(n, 0.0);
  for (int it = 0; it < kMaxIterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dc = squared_distance(points[i], r.centroids[c]);
        if (dc < best_d) {
          best_d = dc;
          best = static_cast<int>(c);
        }
      }
      if (best != r.labels[i]) changed = true;
      r.labels[i] = best;
      dist[i] = best_d;
    }
    // Inertia of the new assignment against the current centroids; it can
    // only drop after the centroid update below.
    double assigned = 0.0;
    for (double v : dist) assigned += v;
    if (!r.inertia.empty() && assigned > r.inertia.back() * (1.0 + 1e-12) + 1e-300) {
      throw std::logic_error("kmeans: inertia increased");
    }
    if (!changed && it > 0) break;
    r.iterations = it + 1;

    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.labels[i]);
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums[c][j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) r.centroids[c][j] = sums[c][j] / counts[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double di =
            squared_distance(points[i], r.centroids[static_cast<std::size_t>(r.labels[i])]);
        if (di > far_d && counts[static_cast<std::size_t>(r.labels[i])] > 1) {
          far_d = di;
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(r.labels[far])];
      r.labels[far] = static_cast<int>(c);
      counts[c] = 1;
      r.centroids[c] = points[far];
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_distance(points[i], r.centroids[static_cast<std::size_t>(r.labels[i])]);
    }
    if (inertia > assigned * (1.0 + 1e-12) + 1e-300) {
      throw std::logic_error("kmeans: inertia increased");
    }
    r.inertia.push_back(inertia);
  }
  return r;
}

std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost[0].size();
  if (cols < rows) throw std::invalid_argument("hungarian: more rows than columns");
  for (const auto& r : cost) {
    if (r.size() != cols) throw std::invalid_argument("hungarian: ragged cost matrix");
  }
  // Shortest augmenting paths with row/column potentials, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t i = 1; i <= rows; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(rows, -1);
  for (std::size_t j = 1; j <= cols; ++j) {
    if (match[j] != 0) assignment[match[j] - 1] = static_cast<int>(j - 1);
  }
  return assignment;
}

namespace {

// Maps arbitrary ids to 0..m-1 in increasing id order.
std::vector<int> dense_ids(const std::vector<int>& ids, int& count) {
  std::map<int, int> index;
  for (int id : ids) index.emplace(id, 0);
  int next = 0;
  for (auto& [id, slot] : index) slot = next++;
  count = next;
  std::vector<int> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = index[ids[i]];
  return out;
}

}  // namespace

SegmentationScores segmentation_scores(const std::vector<int>& predicted,
                                       const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("segmentation_scores: label count mismatch");
  }
  int g = 0, p = 0;
  const auto gt = dense_ids(truth, g);
  const auto pr = dense_ids(predicted, p);
  std::vector<std::vector<double>> overlap(g, std::vector<double>(p, 0.0));
  std::vector<double> gsize(g, 0.0), psize(p, 0.0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    overlap[gt[i]][pr[i]] += 1.0;
    gsize[gt[i]] += 1.0;
    psize[pr[i]] += 1.0;
  }
  const auto iou = [&](int a, int b) {
    return overlap[a][b] / (gsize[a] + psize[b] - overlap[a][b]);
  };
  // Square cost matrix so that both orientations are handled; padded
  // entries cost nothing.
  const int side = std::max(g, p);
  std::vector<std::vector<double>> cost(side, std::vector<double>(side, 0.0));
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < p; ++b) cost[a][b] = -iou(a, b);
  }
  const auto match = hungarian(cost);

  SegmentationScores s;
  for (int a = 0; a < g; ++a) {
    const int b = match[a];
    if (b < 0 || b >= p || overlap[a][b] == 0.0) continue;
    const double precision = overlap[a][b] / psize[b];
    const double recall = overlap[a][b] / gsize[a];
    s.miou += iou(a, b);
    s.precision += precision;
    s.recall += recall;
    s.f1 += 2.0 * precision * recall / (precision + recall);
  }
  s.miou /= g;
  s.precision /= g;
  s.recall /= g;
  s.f1 /= g;
  return s;
}

std::vector<std::vector<double>> standardize(
    std::vector<std::vector<double>> features) {
  if (features.empty()) return features;
  const std::size_t d = features[0].size();
  const double n = static_cast<double>(features.size());
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (const auto& f : features) m += f[j];
    m /= n;
    double var = 0.0;
    for (const auto& f : features) var += (f[j] - m) * (f[j] - m);
    const double sd = std::sqrt(var / n);
    const bool flat = sd <= 1e-12 * std::max(1.0, std::abs(m));
    for (auto& f : features) f[j] = flat ? 0.0 : (f[j] - m) / sd;
  }
  return features;
}

std::vector<double> uniform_timestamps(double t0, double t1, int count) {
  if (count < 1) throw std::invalid_argument("uniform_timestamps: count < 1");
  std::vector<double> t(static_cast<std::size_t>(count), t0);
  if (count == 1) return t;
  for (int i = 0; i < count; ++i) t[i] = t0 + (t1 - t0) * i / (count - 1);
  return t;
}

}  // namespace splatphys
