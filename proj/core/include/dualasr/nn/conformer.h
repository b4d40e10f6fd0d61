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

#include "dualasr/nn/attention.h"
#include "dualasr/nn/layers.h"

namespace dualasr::nn {

// Pointwise(d->2d) -> GLU -> depthwise(k) -> LayerNorm -> Swish -> pointwise(d->d).
struct ConvModule {
  ConvModule() = default;
  ConvModule(ParamStore& ps, const std::string& name, int64_t d_model, int64_t kernel);
  // Frames at index >= valid are zeroed before and after the depthwise conv.
  Tensor Forward(const Tensor& x, int64_t valid) const;

  Linear pointwise1;
  Tensor depthwise_weight;  // [kernel, d]
  Tensor depthwise_bias;    // [d]
  LayerNormParams norm;
  Linear pointwise2;
  int64_t d_model = 0;
};

// Macaron Conformer block:
//   x += 0.5 FF1(LN x); x += MHSA(LN x); x += Conv(LN x); x += 0.5 FF2(LN x); LN.
struct ConformerLayer {
  ConformerLayer() = default;
  ConformerLayer(ParamStore& ps, const std::string& name, int64_t d_model, int64_t n_heads,
                 int64_t ff_dim, int64_t kernel, double rel_pos_base = 10000.0);
  // x [T,d]; frames >= valid are padding and come out as exact zeros.
  Tensor Forward(const Tensor& x, int64_t valid, Dropout* dropout) const;

  LayerNormParams norm_ff1, norm_mha, norm_conv, norm_ff2, norm_final;
  FeedForward ff1, ff2;
  MultiHeadAttention self_attn;
  ConvModule conv;
};

}  // namespace dualasr::nn
