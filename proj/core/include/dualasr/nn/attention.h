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
#include <vector>

#include "dualasr/nn/layers.h"

namespace dualasr::nn {

// Multi-head scaled dot-product attention.
//
// With relative positions enabled (self-attention only), the logits of head h
// follow the Transformer-XL form
//   ((q_i + u_h) . k_j + (q_i + v_h) . W_pos p_{i-j}) / sqrt(d_head)
// where p_r is the sinusoidal encoding of the signed distance r = i - j.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& ps, const std::string& name, int64_t d_model,
                     int64_t n_heads, bool relative, double rel_pos_base = 10000.0);

  // q_in [Tq,d], kv_in [Tk,d], mask [Tq*Tk] with 1 = allowed.
  Tensor Forward(const Tensor& q_in, const Tensor& kv_in,
                 std::span<const uint8_t> mask, Dropout* dropout) const;

  // Pre-mask logits of one head, [Tq,Tk].
  Tensor Logits(const Tensor& q_in, const Tensor& kv_in, int64_t head) const;

  int64_t d_model() const { return d_model_; }
  int64_t n_heads() const { return n_heads_; }
  bool relative() const { return relative_; }
  double rel_pos_base() const { return rel_pos_base_; }

  Linear w_q, w_k, w_v, w_o;
  Linear w_pos;      // relative mode, no bias
  Tensor pos_bias_u;  // [heads, d_head]
  Tensor pos_bias_v;

 private:
  struct Projected {
    Tensor q, k, v, p;
  };
  Projected Project(const Tensor& q_in, const Tensor& kv_in) const;
  Tensor HeadLogits(const Projected& pr, int64_t head, int64_t tq, int64_t tk) const;

  int64_t d_model_ = 0;
  int64_t n_heads_ = 0;
  int64_t d_head_ = 0;
  bool relative_ = false;
  double rel_pos_base_ = 10000.0;
};

}  // namespace dualasr::nn
