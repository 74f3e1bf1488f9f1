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

#include "splatphys/linalg.hpp"

#include <cmath>
#include <sstream>

namespace splatphys {

namespace {
constexpr int kMaxPolarIterations = 20;
constexpr double kPolarTolerance = 1e-12;
// Below this step size the unscaled iteration is already quadratic.
constexpr double kScalingCutoff = 1e-2;
}  // namespace

PolarResult polar_decompose(const Mat3& f) {
  const double det = f.determinant();
  if (!(det > 0.0)) {
    std::ostringstream os;
    os << "polar_decompose: det(F) = " << det << " <= 0 (inverted element)";
    throw InvertedElement(os.str());
  }
  PolarResult out;
  Mat3 x = f;
  bool scaled = true;
  for (int it = 0; it < kMaxPolarIterations; ++it) {
    const Mat3 inv_t = x.inverse().transpose();
    Mat3 next;
    if (scaled) {
      const double gamma = std::sqrt(inv_t.norm() / x.norm());
      next = 0.5 * (gamma * x + inv_t / gamma);
    } else {
      next = 0.5 * (x + inv_t);
    }
    const double step = (next - x).norm();
    x = next;
    out.iterations = it + 1;
    if (step < kScalingCutoff) scaled = false;
    if (step < kPolarTolerance) break;
  }
  out.rotation = x;
  const Mat3 s = x.transpose() * f;
  out.stretch = 0.5 * (s + s.transpose());
  return out;
}

// With F = R S and dR = R [w]x, skew(R^T dF) determines w through
// (tr(S) I - S) w = unskew(R^T dF); dS = R^T dF - [w]x S. The adjoint of
// that linear map gives the expression below.
Mat3 polar_backward(const Mat3& rotation, const Mat3& stretch,
                    const Mat3& grad_r, const Mat3& grad_s) {
  const Mat3 k = (stretch.trace() * Mat3::Identity() - stretch).inverse();
  const Vec3 u_r = unskew(rotation.transpose() * grad_r);
  const Vec3 u_s = unskew(grad_s * stretch);
  return rotation * (grad_s + skew(k * (u_r - u_s)));
}

}  // namespace splatphys
