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

#include "dualasr/tensor/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dualasr/errors.h"

namespace dualasr {

namespace {

double Evaluate(const std::function<Tensor()>& f) {
  NoGradScope no_grad;
  Tensor y = f();
  if (y.numel() != 1) {
    throw ContractError("finite_difference_check: f must return a scalar, got " +
                        ShapeToString(y.shape()));
  }
  return y.item();
}

}  // namespace

double FiniteDifferenceCheck(const std::function<Tensor()>& f,
                             std::span<Tensor> params, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_difference_check: eps must be > 0");
  for (const Tensor& p : params) {
    if (p.dtype() != DType::kF64) {
      throw ContractError("finite_difference_check: parameters must be f64");
    }
    if (!p.is_leaf()) {
      throw ContractError("finite_difference_check: parameters must be leaves");
    }
  }
  const double y0 = Evaluate(f);
  const double y1 = Evaluate(f);
  if (y0 != y1) {
    throw ContractError("finite_difference_check: f is not deterministic");
  }

  std::vector<bool> saved_flags;
  for (Tensor& p : params) {
    saved_flags.push_back(p.requires_grad());
    p.set_requires_grad(true);
    p.ZeroGrad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f();
    tape.Backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (const Tensor& p : params) {
    if (p.has_grad()) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      analytic.emplace_back(p.numel(), 0.0);
    }
  }

  double worst = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    std::span<double> v = params[k].mutable_data();
    for (size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + eps;
      const double up = Evaluate(f);
      v[i] = orig - eps;
      const double down = Evaluate(f);
      v[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double err =
          std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  for (size_t k = 0; k < params.size(); ++k) {
    params[k].ZeroGrad();
    params[k].set_requires_grad(saved_flags[k]);
  }
  return worst;
}

}  // namespace dualasr
