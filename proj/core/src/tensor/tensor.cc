// Copyright (c) 2026 The dualasr Authors. All Rights Reserved.
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

#include "dualasr/tensor/tensor.h"

#include <sstream>

#include "dualasr/errors.h"

namespace dualasr {

namespace {

thread_local Tape* g_active_tape = nullptr;

void RoundToDType(std::vector<double>& values, DType dtype) {
  if (dtype != DType::kF32) return;
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values, DType dtype,
               bool requires_grad) {
  if (NumElements(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("tensor: shape " + ShapeToString(shape) + " needs " +
                     std::to_string(NumElements(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  RoundToDType(values, dtype);
  node_ = std::make_shared<internal::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->dtype = dtype;
  node_->requires_grad = requires_grad;
}

Tensor Tensor::Zeros(Shape shape, DType dtype, bool requires_grad) {
  return Full(std::move(shape), 0.0, dtype, requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, DType dtype, bool requires_grad) {
  const int64_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), dtype,
                requires_grad);
}

Tensor Tensor::Scalar(double value, DType dtype) {
  return Tensor({}, {value}, dtype);
}

Tensor Tensor::FromNode(std::shared_ptr<internal::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const internal::Node& Tensor::checked() const {
  if (!node_) throw ContractError("access to an undefined tensor");
  return *node_;
}

internal::Node& Tensor::checked() {
  if (!node_) throw ContractError("access to an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return checked().shape; }

int64_t Tensor::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     ShapeToString(shape()));
  }
  return shape()[a];
}

int64_t Tensor::numel() const {
  return static_cast<int64_t>(checked().value.size());
}

DType Tensor::dtype() const { return checked().dtype; }

bool Tensor::requires_grad() const { return checked().requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!is_leaf()) throw ContractError("set_requires_grad on a non-leaf tensor");
  checked().requires_grad = value;
}

bool Tensor::is_leaf() const { return checked().producer == nullptr; }

std::span<const double> Tensor::data() const { return checked().value; }

std::span<double> Tensor::mutable_data() {
  if (!is_leaf()) throw ContractError("mutable_data on a recorded intermediate");
  return checked().value;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return checked().value[0];
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw ShapeError("at(): index rank mismatch for shape " + ShapeToString(s));
  }
  int64_t flat = 0;
  size_t axis = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= s[axis]) {
      throw ShapeError("at(): index out of range for shape " + ShapeToString(s));
    }
    flat = flat * s[axis] + i;
    ++axis;
  }
  return checked().value[flat];
}

bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const { return checked().grad; }

std::span<double> Tensor::mutable_grad() { return checked().EnsureGrad(); }

void Tensor::ZeroGrad() { checked().grad.clear(); }

Tensor Tensor::Clone(bool requires_grad) const {
  const internal::Node& n = checked();
  return Tensor(n.shape, n.value, n.dtype, requires_grad);
}

Tensor Tensor::To(DType dtype) const {
  const internal::Node& n = checked();
  return Tensor(n.shape, n.value, dtype, false);
}

void Tape::Record(std::string_view op,
                  std::vector<std::shared_ptr<internal::Node>> inputs,
                  std::shared_ptr<internal::Node> output, BackwardFn backward) {
  if (consumed_) {
    throw ContractError("recording '" + std::string(op) +
                        "' on a consumed tape; call Reset() first");
  }
  output->producer = this;
  output->producer_epoch = epoch_;
  entries_.push_back(
      Entry{op, std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::Backward(const Tensor& loss) {
  if (consumed_) {
    throw ContractError("backward called twice on the same tape");
  }
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? ShapeToString(loss.shape()) : "<undefined>"));
  }
  if (loss.node()->producer != this || loss.node()->producer_epoch != epoch_) {
    throw ContractError("backward: loss was not produced on this tape");
  }
  consumed_ = true;
  loss.node_ptr()->EnsureGrad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward();
  }
  entries_.clear();
  entries_.shrink_to_fit();
}

void Tape::Reset() {
  entries_.clear();
  consumed_ = false;
  ++epoch_;
}

Tape* Tape::Active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }

NoGradScope::~NoGradScope() { g_active_tape = previous_; }

}  // namespace dualasr
