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

#include "splatphys/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace splatphys {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("Tensor: shape " + shape_string(shape_) + " holds " +
                     std::to_string(shape_size(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Tensor::matrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("Tensor::dim: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_string(shape_));
  }
  return shape_[axis];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  if (rank() != 2) throw ShapeError("Tensor::at(i, j) needs a matrix");
  return data_[i * shape_[1] + j];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("Tensor::item: shape " + shape_string(shape_) +
                     " is not a single element");
  }
  return data_[0];
}

std::span<double> Tensor::mutable_data() {
  if (attached()) {
    throw std::logic_error("Tensor: taped values cannot be mutated");
  }
  return data_;
}

Tensor Tensor::detach() const { return Tensor(shape_, data_); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(shape_) + " as " +
                     shape_string(shape));
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

// ---------------------------------------------------------------------------

Tensor Tape::leaf(const Tensor& value) {
  Tensor out = value.detach();
  Node node;
  node.size = out.size();
  nodes_.push_back(std::move(node));
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size()) - 1;
  leaves_.push_back(out.node_);
  leaf_shapes_.push_back(out.shape());
  return out;
}

Tensor Tape::record(Tensor output, std::span<const Tensor* const> inputs,
                    BackwardFn backward) {
  Node node;
  node.size = output.size();
  node.parents.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    node.parents.push_back(in->tape_ == this ? in->node_ : -1);
  }
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  output.tape_ = this;
  output.node_ = static_cast<int>(nodes_.size()) - 1;
  return output;
}

GradientMap Tape::backward(const Tensor& loss) const {
  if (loss.tape_ != this) {
    throw std::logic_error("Tape::backward: loss is not recorded on this tape");
  }
  if (loss.size() != 1) {
    throw ShapeError("Tape::backward: loss must be a scalar, got shape " +
                     shape_string(loss.shape()));
  }
  std::vector<std::vector<double>> grads(nodes_.size());
  grads[loss.node_].assign(1, 1.0);

  std::vector<std::span<double>> accumulators;
  for (int i = loss.node_; i >= 0; --i) {
    const Node& node = nodes_[i];
    if (grads[i].empty() || !node.backward) continue;
    accumulators.assign(node.parents.size(), std::span<double>());
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      const int p = node.parents[k];
      if (p < 0) continue;
      if (grads[p].empty()) grads[p].assign(nodes_[p].size, 0.0);
      accumulators[k] = grads[p];
    }
    node.backward(grads[i], accumulators);
    // Interior gradients are dead once propagated.
    if (i != loss.node_ && !nodes_[i].parents.empty()) {
      std::vector<double>().swap(grads[i]);
    }
  }

  GradientMap map;
  map.tape_ = this;
  map.leaf_nodes_ = leaves_;
  map.grads_.reserve(leaves_.size());
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    const int id = leaves_[k];
    if (grads[id].empty()) {
      map.grads_.push_back(Tensor::zeros(leaf_shapes_[k]));
    } else {
      map.grads_.emplace_back(leaf_shapes_[k], std::move(grads[id]));
    }
  }
  return map;
}

const Tensor& GradientMap::grad(const Tensor& leaf) const {
  if (leaf.tape() == tape_) {
    auto it = std::lower_bound(leaf_nodes_.begin(), leaf_nodes_.end(),
                               leaf.node());
    if (it != leaf_nodes_.end() && *it == leaf.node()) {
      return grads_[static_cast<std::size_t>(it - leaf_nodes_.begin())];
    }
  }
  throw std::logic_error("GradientMap::grad: tensor is not a leaf of this tape");
}

bool GradientMap::contains(const Tensor& leaf) const {
  return leaf.tape() == tape_ &&
         std::binary_search(leaf_nodes_.begin(), leaf_nodes_.end(),
                            leaf.node());
}

// ---------------------------------------------------------------------------

namespace {

Tape* common_tape(std::string_view op,
                  std::span<const Tensor* const> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* in : inputs) {
    if (!in->attached()) continue;
    if (tape && in->tape() != tape) {
      throw std::logic_error(std::string(op) +
                             ": inputs are recorded on different tapes");
    }
    tape = in->tape();
  }
  return tape;
}

}  // namespace

Tensor record_op(std::string_view op, Tensor output,
                 const std::vector<const Tensor*>& inputs,
                 BackwardFn backward) {
  Tape* tape = common_tape(op, inputs);
  if (!tape) return output;
  return tape->record(std::move(output), inputs, std::move(backward));
}

Tensor record_op(std::string_view op, Tensor output,
                 std::initializer_list<const Tensor*> inputs,
                 BackwardFn backward) {
  std::vector<const Tensor*> list(inputs);
  return record_op(op, std::move(output), list, std::move(backward));
}

}  // namespace splatphys
