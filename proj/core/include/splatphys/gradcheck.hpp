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

// Central finite differences against the reverse-mode tape.

#ifndef SPLATPHYS_GRADCHECK_HPP_
#define SPLATPHYS_GRADCHECK_HPP_

#include <functional>
#include <vector>

#include "splatphys/tensor.hpp"

namespace splatphys {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheckResult {
  // max |ad - fd| / max(|ad|_inf, |fd|_inf, floor) over all inputs.
  double relative_error = 0.0;
  double max_abs_error = 0.0;
  std::vector<Tensor> analytic;
  std::vector<Tensor> numeric;
};

// Gradient of a scalar function by central differences with step h. `f` is
// called on detached copies of `inputs`.
std::vector<Tensor> finite_difference_gradient(const ScalarFn& f,
                                               const std::vector<Tensor>& inputs,
                                               double h = 1e-5);

// Compares tape gradients with finite_difference_gradient. `floor` keeps the
// relative error meaningful when the true gradient vanishes.
GradCheckResult check_gradients(const ScalarFn& f,
                                const std::vector<Tensor>& inputs,
                                double h = 1e-5, double floor = 1e-8);

}  // namespace splatphys

#endif  // SPLATPHYS_GRADCHECK_HPP_
