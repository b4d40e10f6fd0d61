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
#include <span>
#include <vector>

#include "dualasr/tensor/tensor.h"

// Differentiable primitives. Every op checks its input shapes (ShapeError
// names the op), rejects non-finite outputs (NumericError) and records a
// backward rule on the active tape when an input requires a gradient.
//
// Broadcasting is limited to the "suffix" rule: in binary elementwise ops the
// second operand's shape must equal a trailing part of the first operand's
// shape, and it is repeated over the leading dimensions.
namespace dualasr::ops {

// Finite stand-in for log(0) in log-space recursions.
inline constexpr double kLogZero = -1e30;

// [m,k] x [k,n] -> [m,n].
Tensor MatMul(const Tensor& a, const Tensor& b);
// 2-D transpose.
Tensor Transpose(const Tensor& x);

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& x, double factor);
Tensor AddScalar(const Tensor& x, double value);

Tensor Concat(std::span<const Tensor> xs, int axis);
Tensor Slice(const Tensor& x, int axis, int64_t start, int64_t length);
Tensor Reshape(const Tensor& x, Shape shape);

// Rows of table [V,d] selected by ids -> [ids.size(), d].
Tensor EmbeddingLookup(const Tensor& table, std::span<const int64_t> ids);

// Along the last axis.
Tensor LogSoftmax(const Tensor& x);
Tensor Softmax(const Tensor& x);
// (x - mean) / sqrt(var + eps) * gamma + beta over the last axis, biased var.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);

Tensor Swish(const Tensor& x);
Tensor Sigmoid(const Tensor& x);
Tensor Relu(const Tensor& x);

// x [T,C], weight [K,C], bias [C]; K odd, symmetric zero padding of (K-1)/2.
Tensor DepthwiseConv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);
// x [T,Cin], weight [Cin,Cout], bias [Cout].
Tensor PointwiseConv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);
// x [Cin,H,W], weight [Cout,Cin,KH,KW], bias [Cout]; no padding.
Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int stride);

// x * mask where mask is a constant (already scaled) keep-mask of x's shape.
Tensor DropoutMaskApply(const Tensor& x, const Tensor& mask);
// Positions with mask != 0 are replaced by value. mask covers either all of
// x or a trailing part of its shape (broadcast over leading dimensions).
Tensor MaskedFill(const Tensor& x, std::span<const uint8_t> mask, double value);

Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);

// out[i] = x.flat[index[i]], or fill where index[i] < 0.
Tensor Gather(const Tensor& x, Shape out_shape, std::span<const int64_t> index,
              double fill = 0.0);
// log(sum(exp(x[r, c]) over r)) for x [R,C] -> [C].
Tensor LogSumExpRows(const Tensor& x);

}  // namespace dualasr::ops
