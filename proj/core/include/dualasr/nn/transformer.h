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
#include <string>

#include "dualasr/nn/attention.h"
#include "dualasr/nn/layers.h"

namespace dualasr::nn {

// Memory view for cross-attention: states [T,d] of which the first valid
// rows are real frames.
struct Memory {
  Tensor states;
  int64_t valid = 0;
};

// Pre-norm decoder layer: causal self-attention, one or two cross-attentions
// (Multi-Transformer when two), ReLU feed-forward. Each sublayer has its own
// LayerNorm and residual.
struct DecoderLayer {
  DecoderLayer() = default;
  DecoderLayer(ParamStore& ps, const std::string& name, int64_t d_model, int64_t n_heads,
               int64_t ff_dim, int n_sources);
  // y [L,d]; memories.size() must equal n_sources.
  Tensor Forward(const Tensor& y, std::span<const Memory> memories, Dropout* dropout) const;
  int n_sources() const { return static_cast<int>(cross.size()); }

  LayerNormParams norm_self;
  MultiHeadAttention self_attn;
  std::vector<LayerNormParams> norm_cross;
  std::vector<MultiHeadAttention> cross;
  LayerNormParams norm_ff;
  FeedForward ff;
};

// Pre-norm encoder layer: self-attention + ReLU feed-forward.
struct EncoderLayer {
  EncoderLayer() = default;
  EncoderLayer(ParamStore& ps, const std::string& name, int64_t d_model, int64_t n_heads,
               int64_t ff_dim);
  Tensor Forward(const Tensor& x, int64_t valid, Dropout* dropout) const;

  LayerNormParams norm_self;
  MultiHeadAttention self_attn;
  LayerNormParams norm_ff;
  FeedForward ff;
};

}  // namespace dualasr::nn
