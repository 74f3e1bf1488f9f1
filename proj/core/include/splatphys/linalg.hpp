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

#ifndef SPLATPHYS_LINALG_HPP_
#define SPLATPHYS_LINALG_HPP_

#include <span>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <Eigen/LU>

namespace splatphys {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

// det F <= 0: the element has collapsed or turned inside out.
class InvertedElement : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Row-major load/store of a 3x3 block in a flat buffer.
inline Mat3 load_mat3(std::span<const double> v) {
  Mat3 m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return m;
}
inline void store_mat3(const Mat3& m, std::span<double> v) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[3 * i + j] = m(i, j);
}
inline void add_mat3(const Mat3& m, std::span<double> v) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[3 * i + j] += m(i, j);
}

inline Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

// (B32 - B23, B13 - B31, B21 - B12); satisfies <B, skew(w)> = w . unskew(B).
inline Vec3 unskew(const Mat3& b) {
  return Vec3(b(2, 1) - b(1, 2), b(0, 2) - b(2, 0), b(1, 0) - b(0, 1));
}

struct PolarResult {
  Mat3 rotation;
  Mat3 stretch;
  int iterations = 0;
};

// Newton iteration X <- (X + X^-T)/2 on the orthogonal factor, with
// Frobenius-norm scaling while far from convergence. Stops at a 1e-12 step
// or 20 iterations.
PolarResult polar_decompose(const Mat3& f);

// Gradient of <grad_r, R(F)> + <grad_s, S(F)> with respect to F.
Mat3 polar_backward(const Mat3& rotation, const Mat3& stretch,
                    const Mat3& grad_r, const Mat3& grad_s);

}  // namespace splatphys

#endif  // SPLATPHYS_LINALG_HPP_
