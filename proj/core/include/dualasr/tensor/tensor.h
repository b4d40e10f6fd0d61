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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualasr {

// Storage precision. Values are always held in double buffers; kF32 tensors
// are rounded to single precision after every forward op so that training
// runs see float arithmetic at op boundaries.
enum class DType { kF32, kF64 };

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

namespace internal {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches this node
  DType dtype = DType::kF64;
  bool requires_grad = false;
  const void* producer = nullptr;  // tape that recorded this node, if any
  uint64_t producer_epoch = 0;

  std::vector<double>& EnsureGrad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace internal

// Dense row-major n-dimensional array with an optional gradient buffer.
//
// Tensor has shared-handle semantics: copies refer to the same node, which is
// what the tape needs to route gradients. Use Clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, DType dtype = DType::kF64,
         bool requires_grad = false);

  static Tensor Zeros(Shape shape, DType dtype = DType::kF64,
                      bool requires_grad = false);
  static Tensor Full(Shape shape, double value, DType dtype = DType::kF64,
                     bool requires_grad = false);
  static Tensor Scalar(double value, DType dtype = DType::kF64);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  // Negative axes count from the back.
  int64_t dim(int axis) const;
  int64_t numel() const;
  DType dtype() const;

  bool requires_grad() const;
  // Only valid on leaves (tensors not produced by a recorded op).
  void set_requires_grad(bool value);
  bool is_leaf() const;

  std::span<const double> data() const;
  // Mutable access is restricted to leaves; recorded intermediates are
  // immutable so backward rules can rely on saved values.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<int64_t> index) const;

  bool has_grad() const;
  // Empty span when no gradient reached this tensor.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();

  // Deep copy as a fresh leaf. Gradient state is not copied.
  Tensor Clone(bool requires_grad = false) const;
  // Same values, cast to dtype, as a fresh leaf.
  Tensor To(DType dtype) const;

  const internal::Node* node() const { return node_.get(); }
  const std::shared_ptr<internal::Node>& node_ptr() const { return node_; }
  static Tensor FromNode(std::shared_ptr<internal::Node> node);

 private:
  const internal::Node& checked() const;
  internal::Node& checked();

  std::shared_ptr<internal::Node> node_;
};

// Ordered record of differentiable operations.
//
// Ops record themselves on the tape installed by a TapeScope on the current
// thread when any input requires a gradient. A tape supports exactly one
// Backward() call; Reset() makes it reusable.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void Record(std::string_view op,
              std::vector<std::shared_ptr<internal::Node>> inputs,
              std::shared_ptr<internal::Node> output, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse order.
  // Gradients accumulate into every node that requires one, including
  // intermediates, so callers may inspect d(loss)/d(activation).
  void Backward(const Tensor& loss);

  void Reset();
  size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

  // Tape installed on this thread, or nullptr in inference mode.
  static Tape* Active();

 private:
  friend class TapeScope;

  struct Entry {
    std::string_view op;
    std::vector<std::shared_ptr<internal::Node>> inputs;
    std::shared_ptr<internal::Node> output;
    BackwardFn backward;
  };

  std::vector<Entry> entries_;
  bool consumed_ = false;
  uint64_t epoch_ = 1;
};

// Installs a tape as the active one for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Disables recording for the current thread (inference).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace dualasr
