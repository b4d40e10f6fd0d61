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
#include <string>

#include "dualasr/nn/layers.h"

namespace dualasr::nn {

// Two 3x3 stride-2 Conv2d + ReLU stages, then a linear map of the flattened
// (channel, frequency) axis to d_model, scaled by sqrt(d_model).
class Conv2dSubsampling {
 public:
  static constexpr int64_t kMinFrames = 7;

  Conv2dSubsampling() = default;
  Conv2dSubsampling(ParamStore& ps, const std::string& name, int64_t feat_dim,
                    int64_t d_model, int64_t channels);

  // Output frame count for t input frames; throws LengthError below kMinFrames.
  static int64_t OutputLength(int64_t t);
  static int64_t OutputFeatureDim(int64_t feat_dim);

  // features [T,F] -> [T',d_model].
  Tensor Forward(const Tensor& features) const;

  Tensor conv1_w, conv1_b, conv2_w, conv2_b;
  Linear out;

 private:
  int64_t feat_dim_ = 0;
  int64_t d_model_ = 0;
  int64_t channels_ = 0;
};

}  // namespace dualasr::nn
