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

// Dense float64 tensors with a reverse-mode differentiation tape.
//
// A Tensor is a value type: shape plus a flat row-major buffer. When it is
// produced by an operation whose inputs live on a Tape, it also carries a
// handle to the node that produced it. Operations never mutate their inputs;
// every op returns a fresh tensor.
//
// Typical use:
//
//   Tape tape;
//   Tensor x = tape.leaf(Tensor::scalar(3.0));
//   Tensor loss = square(x);
//   GradientMap grads = tape.backward(loss);
//   grads.grad(x);  // 6.0
//
// The tape is not thread-safe and must outlive every tensor attached to it.

#ifndef SPLATPHYS_TENSOR_HPP_
#define SPLATPHYS_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace splatphys {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Raised for incompatible operand shapes. The message names the op and the
// offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

class Tensor {
 public:
  // An empty 1-D tensor.
  Tensor() : shape_{0} {}
  Tensor(Shape shape, std::vector<double> data);
  explicit Tensor(Shape shape, double fill = 0.0);

  static Tensor scalar(double value) { return Tensor(Shape{}, {value}); }
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor vector(std::vector<double> values);
  // Row-major matrix from nested rows; every row must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t i, std::size_t j) const;
  // Value of a single-element tensor.
  double item() const;

  // Mutable access is only allowed on detached tensors; taped values are
  // frozen once recorded.
  std::span<double> mutable_data();
  void set(std::size_t i, double value) { mutable_data()[i] = value; }

  bool attached() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  // Same values, no tape handle.
  Tensor detach() const;
  Tensor reshaped(Shape shape) const;

 private:
  friend class Tape;

  Shape shape_;
  std::vector<double> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Receives the gradient of the op output and one accumulator per input.
// An accumulator is empty when the corresponding input is not on the tape;
// implementations must add (never assign) into non-empty accumulators.
using BackwardFn =
    std::function<void(std::span<const double> grad_out,
                       std::span<const std::span<double>> grad_in)>;

class GradientMap {
 public:
  // Gradient for a leaf registered on the tape that produced this map.
  // Leaves the loss does not depend on get a zero tensor of their shape.
  const Tensor& grad(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;
  std::size_t leaf_count() const { return grads_.size(); }

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<int> leaf_nodes_;
  std::vector<Tensor> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a differentiable input. The returned tensor is attached.
  Tensor leaf(const Tensor& value);

  // Records an op output. Inputs may be detached; grad_in spans for those
  // are empty. Used by op implementations.
  Tensor record(Tensor output, std::span<const Tensor* const> inputs,
                BackwardFn backward);

  // Reverse sweep from a single-element loss. Each node is visited once.
  GradientMap backward(const Tensor& loss) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }

 private:
  struct Node {
    std::vector<int> parents;  // -1 marks a detached input
    std::size_t size = 0;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::vector<int> leaves_;
  std::vector<Shape> leaf_shapes_;
};

// Finds the shared tape of a set of inputs and records `output` on it, or
// returns `output` detached when no input is attached. Throws
// std::logic_error when inputs live on different tapes.
Tensor record_op(std::string_view op, Tensor output,
                 std::initializer_list<const Tensor*> inputs,
                 BackwardFn backward);
Tensor record_op(std::string_view op, Tensor output,
                 const std::vector<const Tensor*>& inputs,
                 BackwardFn backward);

}  // namespace splatphys

#endif  // SPLATPHYS_TENSOR_HPP_
