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


// Small coordinate networks on top of the tape.

#ifndef SPLATPHYS_NN_HPP_
#define SPLATPHYS_NN_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "splatphys/tensor.hpp"

namespace splatphys {

// A named trainable tensor. Modules own their parameters by value; the
// trainer rebinds them to tape leaves for each iteration.
struct Parameter {
  std::string name;
  Tensor value;
};

using ParameterRefs = std::vector<Parameter*>;

// gamma(x) = (x, sin(2^0 pi x), ..., sin(2^(L-1) pi x), cos(2^0 pi x), ...)
// applied per column. x is (n, d); the result is (n, d (2L + 1)).
Tensor encode_position(const Tensor& x, int frequencies);
inline std::size_t encoded_width(std::size_t dims, int frequencies) {
  return dims * (2 * static_cast<std::size_t>(frequencies) + 1);
}

// Fully connected tanh network: `hidden_layers` hidden layers of width
// `width`, linear output. Weights are (in, out), uniform in
// +-fan_in^(-1/2).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, std::size_t in, std::size_t out, int hidden_layers,
      std::size_t width, std::mt19937_64& rng);

  Tensor forward(const Tensor& x) const;

  std::size_t in_features() const;
  std::size_t out_features() const;
  // Multiplies the last layer (weights and bias) by `factor`.
  void scale_output(double factor);
  void set_output_bias(const std::vector<double>& bias);
  void zero();

  ParameterRefs parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
};

}  // namespace splatphys

#endif  // SPLATPHYS_NN_HPP_
