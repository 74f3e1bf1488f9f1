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

#include "splatphys/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace splatphys {

std::vector<Tensor> finite_difference_gradient(
    const ScalarFn& f, const std::vector<Tensor>& inputs, double h) {
  std::vector<Tensor> probe;
  probe.reserve(inputs.size());
  for (const Tensor& t : inputs) probe.push_back(t.detach());
  std::vector<Tensor> grads;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    Tensor g = Tensor::zeros(probe[k].shape());
    for (std::size_t i = 0; i < probe[k].size(); ++i) {
      const double x0 = probe[k][i];
      probe[k].set(i, x0 + h);
      const double fp = f(probe).item();
      probe[k].set(i, x0 - h);
      const double fm = f(probe).item();
      probe[k].set(i, x0);
      g.set(i, (fp - fm) / (2.0 * h));
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

GradCheckResult check_gradients(const ScalarFn& f,
                                const std::vector<Tensor>& inputs, double h,
                                double floor) {
  GradCheckResult out;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    const Tensor loss = f(leaves);
    if (!loss.attached()) {
      for (const Tensor& t : inputs) out.analytic.push_back(Tensor::zeros(t.shape()));
    } else {
      const GradientMap grads = tape.backward(loss);
      for (const Tensor& l : leaves) out.analytic.push_back(grads.grad(l));
    }
  }
  out.numeric = finite_difference_gradient(f, inputs, h);
  double scale = floor, diff = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double a = out.analytic[k][i], n = out.numeric[k][i];
      scale = std::max({scale, std::abs(a), std::abs(n)});
      diff = std::max(diff, std::abs(a - n));
    }
  }
  out.max_abs_error = diff;
  out.relative_error = diff / scale;
  return out;
}

}  // namespace splatphys
