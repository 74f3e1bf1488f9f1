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


#include "splatphys/nn.hpp"

#include <cmath>
#include <numbers>

#include "splatphys/ops.hpp"

namespace splatphys {

Tensor encode_position(const Tensor& x, int frequencies) {
  if (x.rank() != 2) {
    throw ShapeError("encode_position: expected (n, d), got " +
                     shape_string(x.shape()));
  }
  if (frequencies < 0) throw std::invalid_argument("encode_position: L < 0");
  std::vector<Tensor> parts{x};
  std::vector<Tensor> cosines;
  for (int k = 0; k < frequencies; ++k) {
    const Tensor arg = scale(x, std::ldexp(std::numbers::pi, k));
    parts.push_back(sin(arg));
    cosines.push_back(cos(arg));
  }
  parts.insert(parts.end(), cosines.begin(), cosines.end());
  return concat_last(parts);
}

Mlp::Mlp(std::string name, std::size_t in, std::size_t out, int hidden_layers,
         std::size_t width, std::mt19937_64& rng) {
  std::vector<std::size_t> sizes{in};
  for (int i = 0; i < hidden_layers; ++i) sizes.push_back(width);
  sizes.push_back(out);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor w({sizes[l], sizes[l + 1]});
    for (double& v : w.mutable_data()) v = u(rng);
    Tensor b({sizes[l + 1]});
    for (double& v : b.mutable_data()) v = u(rng);
    const std::string layer = name + "." + std::to_string(l);
    weights_.push_back({layer + ".weight", std::move(w)});
    biases_.push_back({layer + ".bias", std::move(b)});
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = add(matmul(h, weights_[l].value), biases_[l].value);
    if (l + 1 < weights_.size()) h = tanh(h);
  }
  return h;
}

std::size_t Mlp::in_features() const {
  return weights_.empty() ? 0 : weights_.front().value.dim(0);
}
std::size_t Mlp::out_features() const {
  return weights_.empty() ? 0 : weights_.back().value.dim(1);
}

void Mlp::scale_output(double factor) {
  for (double& v : weights_.back().value.mutable_data()) v *= factor;
  for (double& v : biases_.back().value.mutable_data()) v *= factor;
}

void Mlp::set_output_bias(const std::vector<double>& bias) {
  Tensor& b = biases_.back().value;
  if (bias.size() != b.size()) {
    throw ShapeError("Mlp::set_output_bias: expected " +
                     std::to_string(b.size()) + " values");
  }
  for (std::size_t i = 0; i < bias.size(); ++i) b.set(i, bias[i]);
}

void Mlp::zero() {
  for (auto* p : parameters()) p->value = Tensor::zeros(p->value.shape());
}

ParameterRefs Mlp::parameters() {
  ParameterRefs out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

}  // namespace splatphys
