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

// Differentiable tensor primitives.
//
// Binary elementwise ops broadcast numpy-style: shapes are aligned on their
// trailing dimensions and size-1 dimensions expand.

#ifndef SPLATPHYS_OPS_HPP_
#define SPLATPHYS_OPS_HPP_

#include <cstddef>
#include <utility>
#include <vector>

#include "splatphys/tensor.hpp"

namespace splatphys {

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op);

// Elementwise binary.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Elementwise unary.
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor cos(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);

// Reductions.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Sums out one axis; the result drops that axis.
Tensor sum(const Tensor& x, std::size_t axis);

// (m,k)x(k,n), (b,m,k)x(b,k,n) or (b,m,k)x(k,n).
Tensor matmul(const Tensor& a, const Tensor& b);
// Swaps the two trailing axes of a rank-2 or rank-3 tensor.
Tensor transpose(const Tensor& x);
// Same values, new shape, same tape node.
Tensor reshape(const Tensor& x, Shape shape);

// Slices [begin, end) of the last axis.
Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t end);
// Concatenates along the last axis; leading dimensions must agree.
Tensor concat_last(const std::vector<Tensor>& parts);

// out[i] = x[indices[i]] along axis 0.
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices);
// out = base; out[indices[i]] += values[i] along axis 0.
Tensor scatter_add_rows(const Tensor& base,
                        const std::vector<std::size_t>& indices,
                        const Tensor& values);

// Row-wise cross product of two (n,3) tensors.
Tensor cross_rows(const Tensor& a, const Tensor& b);

// Polar decomposition F = R S of a (3,3) or (n,3,3) tensor with det F > 0.
// R is a rotation, S symmetric positive definite. Throws InvertedElement
// when some det F <= 0.
std::pair<Tensor, Tensor> polar_decompose(const Tensor& f);

}  // namespace splatphys

#endif  // SPLATPHYS_OPS_HPP_
