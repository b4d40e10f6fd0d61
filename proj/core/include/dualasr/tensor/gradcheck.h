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

#include <functional>
#include <span>

#include "dualasr/tensor/tensor.h"

namespace dualasr {

// Compares tape gradients of a scalar function against central differences.
//
// f must rebuild its graph from params on every call. All params must be f64
// leaves. Returns max over coordinates of
//   |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
// Throws ContractError when two evaluations at the same point disagree.
double FiniteDifferenceCheck(const std::function<Tensor()>& f,
                             std::span<Tensor> params, double eps = 1e-5);

}  // namespace dualasr
