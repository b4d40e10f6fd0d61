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
#include <vector>

#include "dualasr/tensor/tensor.h"

namespace dualasr {

struct OptimizerConfig {
  double peak_lr = 1e-3;
  int64_t warmup_steps = 500;
  // Steps for the learning rate to halve after warmup; 0 keeps it at peak.
  double half_life_steps = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double weight_decay = 0.0;
  double clip_norm = 5.0;  // global L2 norm; 0 disables clipping

  void Validate() const;
};

// Linear warmup to peak_lr over warmup_steps, then exponential decay with
// the configured half-life. step is 1-based.
double LearningRate(const OptimizerConfig& cfg, int64_t step);

// Adam with decoupled weight decay over a fixed parameter list.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, const OptimizerConfig& cfg);

  // Clips the gradients to clip_norm, applies one update with the given
  // learning rate and clears the gradients. Returns the pre-clipping global
  // gradient norm. Throws NumericError on a non-finite gradient, leaving the
  // parameters untouched.
  double Step(double lr);
  void ZeroGrad();
  int64_t steps() const { return t_; }

 private:
  std::vector<Tensor> params_;
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace dualasr
