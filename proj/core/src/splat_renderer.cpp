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

#include "splatphys/splat_renderer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "splatphys/ops.hpp"

namespace splatphys {

namespace {

constexpr double kShC1 = 0.4886025119029199;

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// d R(q / |q|) contracted with grad_r, as a gradient on the raw q.
Quat quat_rotation_backward(const Quat& q, const Mat3& g) {
  const double n = q.norm();
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  Quat gq;
  gq[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) -
               y * g(2, 0) + x * g(2, 1));
  gq[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) -
               w * g(1, 2) + z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  gq[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) +
               z * g(1, 2) - w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  gq[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) -
               2 * z * g(1, 1) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  const Quat qn = q / n;
  return (gq - qn * qn.dot(gq)) / n;
}

// One projected splat as seen by the rasterizer.
struct Splat {
  bool visible = false;
  Vec3 cam = Vec3::Zero();
  Vec2 center = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
  Mat2 conic = Mat2::Zero();
  Mat23 jac = Mat23::Zero();
  Mat23 t = Mat23::Zero();  // J * W_rot
  Mat3 sigma = Mat3::Zero();
  double opacity = 0.0;
  double depth = 0.0;
  Vec3 rgb = Vec3::Zero();
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds
};

struct Frame {
  int width = 0;
  int height = 0;
  int tile = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<Splat> splats;
  std::vector<std::vector<int>> bins;  // depth-ordered particle ids per tile
};

Frame build_frame(const Tensor& positions, const Tensor& covariances,
                  const Tensor& logits, const Tensor& rgb, const Camera& cam,
                  const RenderOptions& opt) {
  Frame fr;
  fr.width = cam.width;
  fr.height = cam.height;
  fr.tile = std::max(1, opt.tile_size);
  fr.tiles_x = (fr.width + fr.tile - 1) / fr.tile;
  fr.tiles_y = (fr.height + fr.tile - 1) / fr.tile;
  const std::size_t n = positions.dim(0);
  fr.splats.resize(n);
  const Mat3 wr = cam.rotation();
  std::vector<int> order;
  for (std::size_t i = 0; i < n; ++i) {
    Splat& s = fr.splats[i];
    const Vec3 p(positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]);
    s.cam = cam.to_camera(p);
    s.depth = s.cam.z();
    if (!(s.cam.z() > kNearPlane)) continue;
    s.sigma = load_mat3(covariances.data().subspan(9 * i, 9));
    s.jac = projection_jacobian(cam, s.cam);
    s.t = s.jac * wr;
    const Mat2 c = s.t * s.sigma * s.t.transpose();
    s.cov = 0.5 * (c + c.transpose());
    const double det = s.cov.determinant();
    if (!(det > 0.0)) continue;
    s.conic = s.cov.inverse();
    s.center = Vec2(cam.fx * s.cam.x() / s.cam.z() + cam.cx,
                    cam.fy * s.cam.y() / s.cam.z() + cam.cy);
    s.opacity = sigmoid_scalar(logits[i]);
    s.rgb = Vec3(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    if (!(s.opacity > opt.alpha_cutoff)) continue;
    s.x0 = 0;
    s.x1 = fr.width - 1;
    s.y0 = 0;
    s.y1 = fr.height - 1;
    if (opt.alpha_cutoff > 0.0) {
      const double m2 = 2.0 * std::log(s.opacity / opt.alpha_cutoff);
      const double mid = 0.5 * (s.cov(0, 0) + s.cov(1, 1));
      const double lmax = mid + std::sqrt(std::max(mid * mid - det, 0.0));
      const double r = std::sqrt(m2 * lmax);
      // Clamp before the integer conversion; far-off splats may give huge r.
      const auto lo = [](double v) { return std::max(-1.0, std::ceil(v)); };
      const auto hi = [](double v, int m) { return std::min(double(m), std::floor(v)); };
      s.x0 = std::max(s.x0, static_cast<int>(lo(s.center.x() - r)));
      s.x1 = std::min(s.x1, static_cast<int>(hi(s.center.x() + r, fr.width)));
      s.y0 = std::max(s.y0, static_cast<int>(lo(s.center.y() - r)));
      s.y1 = std::min(s.y1, static_cast<int>(hi(s.center.y() + r, fr.height)));
    }
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    s.visible = true;
    order.push_back(static_cast<int>(i));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return fr.splats[a].depth < fr.splats[b].depth;
  });
  fr.bins.assign(static_cast<std::size_t>(fr.tiles_x) * fr.tiles_y, {});
  for (int id : order) {
    const Splat& s = fr.splats[id];
    for (int ty = s.y0 / fr.tile; ty <= s.y1 / fr.tile; ++ty)
      for (int tx = s.x0 / fr.tile; tx <= s.x1 / fr.tile; ++tx)
        fr.bins[ty * fr.tiles_x + tx].push_back(id);
  }
  return fr;
}

struct Hit {
  int id;
  double alpha;
  double transmittance;  // before this splat
  bool clamped;
  Vec2 d;
};

// Front-to-back compositing of one pixel; fills `hits` and returns color.
Vec3 composite(const Frame& fr, int x, int y, double clamp,
               std::vector<Hit>& hits) {
  hits.clear();
  Vec3 c = Vec3::Zero();
  double trans = 1.0;
  const auto& bin = fr.bins[(y / fr.tile) * fr.tiles_x + x / fr.tile];
  for (int id : bin) {
    const Splat& s = fr.splats[id];
    if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1) continue;
    const Vec2 d(x - s.center.x(), y - s.center.y());
    const double power = -0.5 * d.dot(s.conic * d);
    double a = s.opacity * std::exp(power);
    bool clamped = false;
    if (a > clamp) {
      a = clamp;
      clamped = true;
    }
    hits.push_back({id, a, trans, clamped, d});
    c += s.rgb * (a * trans);
    trans *= 1.0 - a;
  }
  return c;
}

}  // namespace

Tensor covariance_tensor(const Tensor& rotations, const Tensor& log_scales) {
  if (rotations.rank() != 2 || rotations.dim(1) != 4 ||
      log_scales.rank() != 2 || log_scales.dim(1) != 3 ||
      rotations.dim(0) != log_scales.dim(0)) {
    throw ShapeError("covariance_tensor: expected (n, 4) and (n, 3), got " +
                     shape_string(rotations.shape()) + " and " +
                     shape_string(log_scales.shape()));
  }
  const std::size_t n = rotations.dim(0);
  std::vector<double> out(9 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Quat q(rotations[4 * i], rotations[4 * i + 1], rotations[4 * i + 2],
                 rotations[4 * i + 3]);
    const Vec3 s(log_scales[3 * i], log_scales[3 * i + 1],
                 log_scales[3 * i + 2]);
    store_mat3(covariance_from_rs(q, s), std::span<double>(out).subspan(9 * i, 9));
  }
  const auto& qv = rotations.values();
  const auto& sv = log_scales.values();
  return record_op(
      "covariance", Tensor({n, 9}, std::move(out)), {&rotations, &log_scales},
      [qv, sv, n](std::span<const double> g,
                  std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < n; ++i) {
          const Quat q(qv[4 * i], qv[4 * i + 1], qv[4 * i + 2], qv[4 * i + 3]);
          const Vec3 e2 = (2.0 * Vec3(sv[3 * i], sv[3 * i + 1], sv[3 * i + 2]))
                              .array()
                              .exp();
          const Mat3 r = quat_to_rotation(q);
          const Mat3 gs = load_mat3(g.subspan(9 * i, 9));
          const Mat3 gsym = gs + gs.transpose();
          if (!gin[0].empty()) {
            // Sigma = R D R^T: dL/dR = (G + G^T) R D.
            const Quat gq = quat_rotation_backward(q, gsym * r * e2.asDiagonal());
            for (int k = 0; k < 4; ++k) gin[0][4 * i + k] += gq[k];
          }
          if (!gin[1].empty()) {
            const Mat3 rgr = r.transpose() * gs * r;
            for (int k = 0; k < 3; ++k) gin[1][3 * i + k] += 2.0 * e2[k] * rgr(k, k);
          }
        }
      });
}

Tensor sh_colors(const Tensor& coeffs, const Tensor& positions,
                 const Vec3& camera_center, int degree) {
  if (degree == 0) {
    if (coeffs.rank() != 2 || coeffs.dim(1) != 3) {
      throw ShapeError("sh_colors: degree 0 expects (n, 3) coefficients, got " +
                       shape_string(coeffs.shape()));
    }
    return sigmoid(coeffs);
  }
  if (degree != 1) throw std::invalid_argument("sh_colors: degree must be 0 or 1");
  if (coeffs.rank() != 2 || coeffs.dim(1) != 12 ||
      positions.shape() != Shape{coeffs.dim(0), 3}) {
    throw ShapeError("sh_colors: degree 1 expects (n, 12) and (n, 3), got " +
                     shape_string(coeffs.shape()) + " and " +
                     shape_string(positions.shape()));
  }
  const std::size_t n = coeffs.dim(0);
  std::vector<double> out(3 * n);
  const auto& cv = coeffs.values();
  const auto& pv = positions.values();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d =
        (Vec3(pv[3 * i], pv[3 * i + 1], pv[3 * i + 2]) - camera_center).normalized();
    for (int ch = 0; ch < 3; ++ch) {
      const double* c = &cv[12 * i + 4 * ch];
      const double raw =
          c[0] + kShC1 * (-d.y() * c[1] + d.z() * c[2] - d.x() * c[3]);
      out[3 * i + ch] = sigmoid_scalar(raw);
    }
  }
  auto y = out;
  return record_op(
      "sh_colors", Tensor({n, 3}, std::move(out)), {&coeffs, &positions},
      [cv, pv, y, n, camera_center](std::span<const double> g,
                                    std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < n; ++i) {
          const Vec3 off = Vec3(pv[3 * i], pv[3 * i + 1], pv[3 * i + 2]) - camera_center;
          const double len = off.norm();
          const Vec3 d = off / len;
          Vec3 gd = Vec3::Zero();
          for (int ch = 0; ch < 3; ++ch) {
            const double* c = &cv[12 * i + 4 * ch];
            const double s = y[3 * i + ch];
            const double graw = g[3 * i + ch] * s * (1.0 - s);
            if (!gin[0].empty()) {
              double* gc = &gin[0][12 * i + 4 * ch];
              gc[0] += graw;
              gc[1] += graw * kShC1 * -d.y();
              gc[2] += graw * kShC1 * d.z();
              gc[3] += graw * kShC1 * -d.x();
            }
            gd += graw * kShC1 * Vec3(-c[3], -c[1], c[2]);
          }
          if (!gin[1].empty()) {
            const Vec3 gp = (gd - d * d.dot(gd)) / len;
            for (int k = 0; k < 3; ++k) gin[1][3 * i + k] += gp[k];
          }
        }
      });
}

Tensor rasterize(const Tensor& positions, const Tensor& covariances,
                 const Tensor& opacity_logits, const Tensor& rgb,
                 const Camera& camera, const RenderOptions& options) {
  const std::size_t n = positions.rank() == 2 ? positions.dim(0) : 0;
  if (positions.shape() != Shape{n, 3} || covariances.shape() != Shape{n, 9} ||
      opacity_logits.shape() != Shape{n} || rgb.shape() != Shape{n, 3}) {
    throw ShapeError("rasterize: expected (n,3), (n,9), (n), (n,3), got " +
                     shape_string(positions.shape()) + ", " +
                     shape_string(covariances.shape()) + ", " +
                     shape_string(opacity_logits.shape()) + ", " +
                     shape_string(rgb.shape()));
  }
  camera.validate();
  auto frame = std::make_shared<const Frame>(
      build_frame(positions, covariances, opacity_logits, rgb, camera, options));
  const int w = camera.width, h = camera.height;
  std::vector<double> out(static_cast<std::size_t>(3) * w * h, 0.0);
  std::vector<Hit> hits;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec3 c = composite(*frame, x, y, options.alpha_clamp, hits);
      for (int k = 0; k < 3; ++k) out[3 * (y * w + x) + k] = c[k];
    }
  Tensor image({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3},
               std::move(out));
  const double clamp = options.alpha_clamp;
  const Mat3 wr = camera.rotation();
  const double fx = camera.fx, fy = camera.fy;
  return record_op(
      "rasterize", std::move(image),
      {&positions, &covariances, &opacity_logits, &rgb},
      [frame, clamp, wr, fx, fy, n](std::span<const double> g,
                                    std::span<const std::span<double>> gin) {
        const Frame& fr = *frame;
        // Screen-space gradients per splat.
        std::vector<Vec2> g_center(n, Vec2::Zero());
        std::vector<Mat2> g_conic(n, Mat2::Zero());
        std::vector<double> g_opacity(n, 0.0);
        std::vector<Vec3> g_rgb(n, Vec3::Zero());
        std::vector<Hit> hits;
        for (int y = 0; y < fr.height; ++y)
          for (int x = 0; x < fr.width; ++x) {
            const std::size_t px = 3 * static_cast<std::size_t>(y * fr.width + x);
            const Vec3 gc(g[px], g[px + 1], g[px + 2]);
            if (gc.isZero(0.0)) continue;
            composite(fr, x, y, clamp, hits);
            Vec3 behind = Vec3::Zero();  // sum over later splats of c a T
            for (std::size_t k = hits.size(); k-- > 0;) {
              const Hit& hit = hits[k];
              const Splat& s = fr.splats[hit.id];
              g_rgb[hit.id] += gc * (hit.alpha * hit.transmittance);
              const double g_alpha =
                  gc.dot(s.rgb * hit.transmittance - behind / (1.0 - hit.alpha));
              behind += s.rgb * (hit.alpha * hit.transmittance);
              if (hit.clamped) continue;
              const double gauss = hit.alpha / s.opacity;
              g_opacity[hit.id] += g_alpha * gauss;
              const double g_power = g_alpha * hit.alpha;
              const Vec2 kd = s.conic * hit.d;
              g_center[hit.id] += g_power * kd;
              g_conic[hit.id] += -0.5 * g_power * hit.d * hit.d.transpose();
            }
          }
        for (std::size_t i = 0; i < n; ++i) {
          const Splat& s = fr.splats[i];
          if (!s.visible) continue;
          if (!gin[3].empty())
            for (int k = 0; k < 3; ++k) gin[3][3 * i + k] += g_rgb[i][k];
          if (!gin[2].empty()) {
            gin[2][i] += g_opacity[i] * s.opacity * (1.0 - s.opacity);
          }
          const Mat2 g_cov = -s.conic * g_conic[i] * s.conic;
          if (!gin[1].empty()) {
            add_mat3(s.t.transpose() * g_cov * s.t, gin[1].subspan(9 * i, 9));
          }
          if (!gin[0].empty()) {
            const Mat23 g_t = (g_cov + g_cov.transpose()) * s.t * s.sigma;
            const Mat23 g_j = g_t * wr.transpose();
            const double cx = s.cam.x(), cy = s.cam.y(), z = s.cam.z();
            const double iz = 1.0 / z, iz2 = iz * iz, iz3 = iz2 * iz;
            const Vec2& gu = g_center[i];
            Vec3 g_cam;
            g_cam.x() = gu.x() * fx * iz - g_j(0, 2) * fx * iz2;
            g_cam.y() = gu.y() * fy * iz - g_j(1, 2) * fy * iz2;
            g_cam.z() = -gu.x() * fx * cx * iz2 - gu.y() * fy * cy * iz2 -
                        g_j(0, 0) * fx * iz2 + g_j(0, 2) * 2.0 * fx * cx * iz3 -
                        g_j(1, 1) * fy * iz2 + g_j(1, 2) * 2.0 * fy * cy * iz3;
            const Vec3 gp = wr.transpose() * g_cam;
            for (int k = 0; k < 3; ++k) gin[0][3 * i + k] += gp[k];
          }
        }
      });
}

Tensor render(const GaussianTensors& gaussians, int sh_degree,
              const Camera& camera, const Tensor* positions,
              const Tensor* deformation, const RenderOptions& options) {
  const Tensor& pos = positions ? *positions : gaussians.positions;
  Tensor cov = covariance_tensor(gaussians.rotations, gaussians.log_scales);
  if (deformation && options.deform_covariance) {
    const std::size_t n = pos.dim(0);
    if (deformation->shape() != Shape{n, 9}) {
      throw ShapeError("render: deformation must be (n, 9), got " +
                       shape_string(deformation->shape()));
    }
    const Tensor f = reshape(*deformation, {n, 3, 3});
    cov = reshape(matmul(matmul(f, reshape(cov, {n, 3, 3})), transpose(f)),
                  {n, 9});
  }
  const Tensor rgb =
      sh_colors(gaussians.colors, pos, camera.center(), sh_degree);
  return rasterize(pos, cov, gaussians.opacity_logits, rgb, camera, options);
}

Image render(const Scene& scene, const Camera& camera,
             const Deformation* deformation, const RenderOptions& options) {
  const GaussianTensors g = scene_tensors(scene);
  if (!deformation) {
    return Image::from_tensor(render(g, scene.sh_degree, camera, nullptr,
                                     nullptr, options));
  }
  const std::size_t n = scene.size();
  if (deformation->positions.size() != n || deformation->gradients.size() != n) {
    throw std::invalid_argument("render: deformation needs one entry per particle");
  }
  Tensor pos({n, 3}), f({n, 9});
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) pos.set(3 * i + k, deformation->positions[i][k]);
    store_mat3(deformation->gradients[i], f.mutable_data().subspan(9 * i, 9));
  }
  return Image::from_tensor(
      render(g, scene.sh_degree, camera, &pos, &f, options));
}

// ---------------------------------------------------------------------------
// Reference path: built from the scalar scene helpers only.

namespace {

struct RefSplat {
  std::size_t index;
  double depth;
  Vec2 center;
  Mat2 conic;
  double opacity;
  Vec3 rgb;
};

std::vector<RefSplat> reference_splats(const Scene& scene, const Camera& camera,
                                       const Deformation* deformation,
                                       const RenderOptions& options) {
  std::vector<RefSplat> out;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const GaussianParticle& p = scene.particles[i];
    Vec3 pos = p.position;
    Mat3 sigma = covariance_from_rs(p.rotation, p.log_scale);
    if (deformation) {
      pos = deformation->positions.at(i);
      if (options.deform_covariance) {
        const Mat3& f = deformation->gradients.at(i);
        sigma = f * sigma * f.transpose();
      }
    }
    const Projection proj = project_covariance(sigma, camera, pos);
    if (proj.culled || !(proj.covariance.determinant() > 0.0)) continue;
    Vec3 rgb;
    if (scene.sh_degree == 0) {
      for (int c = 0; c < 3; ++c) rgb[c] = sigmoid_scalar(p.color[c]);
    } else {
      const Vec3 d = (pos - camera.center()).normalized();
      for (int c = 0; c < 3; ++c) {
        const double* k = &p.color[4 * c];
        rgb[c] = sigmoid_scalar(
            k[0] + kShC1 * (-d.y() * k[1] + d.z() * k[2] - d.x() * k[3]));
      }
    }
    out.push_back({i, proj.depth, proj.center, proj.covariance.inverse(),
                   p.opacity(), rgb});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RefSplat& a, const RefSplat& b) {
                     return a.depth < b.depth;
                   });
  return out;
}

}  // namespace

Image render_bruteforce(const Scene& scene, const Camera& camera,
                        const Deformation* deformation,
                        const RenderOptions& options) {
  camera.validate();
  const auto splats = reference_splats(scene, camera, deformation, options);
  Image img(camera.width, camera.height);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      double trans = 1.0;
      Vec3 c = Vec3::Zero();
      for (const RefSplat& s : splats) {
        const Vec2 d = Vec2(x, y) - s.center;
        const double a = std::min(
            s.opacity * std::exp(-0.5 * d.dot(s.conic * d)), options.alpha_clamp);
        c += s.rgb * (a * trans);
        trans *= 1.0 - a;
      }
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
    }
  return img;
}

std::vector<int> render_labels(const Scene& scene, const Camera& camera,
                               const std::vector<int>& labels,
                               const Deformation* deformation,
                               double min_alpha) {
  if (labels.size() != scene.size()) {
    throw std::invalid_argument("render_labels: one label per particle required");
  }
  const auto splats = reference_splats(scene, camera, deformation, {});
  std::vector<int> out(static_cast<std::size_t>(camera.width) * camera.height, 0);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      double trans = 1.0, best = 0.0;
      int best_label = -1;
      for (const RefSplat& s : splats) {
        const Vec2 d = Vec2(x, y) - s.center;
        const double a =
            std::min(s.opacity * std::exp(-0.5 * d.dot(s.conic * d)), 0.999);
        if (a * trans > best) {
          best = a * trans;
          best_label = labels[s.index];
        }
        trans *= 1.0 - a;
      }
      if (1.0 - trans >= min_alpha && best_label >= 0) {
        out[static_cast<std::size_t>(y) * camera.width + x] = best_label + 1;
      }
    }
  return out;
}

}  // namespace splatphys
