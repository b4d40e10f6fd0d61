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

#include "dualasr/tensor/tensor.h"

namespace dualasr {

// Frames needed to emit labels: one per label plus one blank between each
// pair of equal neighbours.
int64_t CtcMinFrames(std::span<const int64_t> labels);

// -log P(labels | log_probs) for log_probs [T,V] (rows are log-distributions).
//
// The forward recursion over the 2L+1 extended sequence is recorded on the
// active tape, so gradients come from differentiating the DP itself.
// Throws InfeasibleError when T < CtcMinFrames(labels). Empty labels score the
// all-blank path.
Tensor CtcLoss(const Tensor& log_probs, std::span<const int64_t> labels, int64_t blank = 0);

}  // namespace dualasr
