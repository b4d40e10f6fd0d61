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

#include "dualasr/nn/attention.h"

#include <cmath>

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"

namespace dualasr::nn {

MultiHeadAttention::MultiHeadAttention(ParamStore& ps, const std::string& name,
                                       int64_t d_model, int64_t n_heads, bool relative,
                                       double rel_pos_base)
    : d_model_(d_model), n_heads_(n_heads), relative_(relative), rel_pos_base_(rel_pos_base) {
  if (n_heads <= 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " is not divisible by n_heads " + std::to_string(n_heads));
  }
  d_head_ = d_model / n_heads;
  w_q = Linear(ps, name + ".w_q", d_model, d_model);
  w_k = Linear(ps, name + ".w_k", d_model, d_model, false);
  w_v = Linear(ps, name + ".w_v", d_model, d_model);
  w_o = Linear(ps, name + ".w_o", d_model, d_model);
  if (relative) {
    w_pos = Linear(ps, name + ".w_pos", d_model, d_model, false);
    const double limit = std::sqrt(6.0 / static_cast<double>(n_heads + d_head_));
    pos_bias_u = ps.Uniform(name + ".pos_bias_u", {n_heads, d_head_}, limit);
    pos_bias_v = ps.Uniform(name + ".pos_bias_v", {n_heads, d_head_}, limit);
  }
}

MultiHeadAttention::Projected MultiHeadAttention::Project(const Tensor& q_in,
                                                          const Tensor& kv_in) const {
  if (q_in.rank() != 2 || kv_in.rank() != 2 || q_in.dim(1) != d_model_ ||
      kv_in.dim(1) != d_model_) {
    throw ShapeError("multi_head_attention: inputs " + ShapeToString(q_in.shape()) + ", " +
                     ShapeToString(kv_in.shape()) + " for d_model " +
                     std::to_string(d_model_));
  }
  if (q_in.dim(0) == 0 || kv_in.dim(0) == 0) {
    throw ContractError("multi_head_attention: empty query or memory");
  }
  Projected pr;
  pr.q = w_q(q_in);
  pr.k = w_k(kv_in);
  pr.v = w_v(kv_in);
  if (relative_) {
    if (q_in.dim(0) != kv_in.dim(0)) {
      throw ContractError("relative attention requires equal query and key lengths");
    }
    pr.p = w_pos(RelativeSinusoidTable(q_in.dim(0), d_model_, q_in.dtype(), rel_pos_base_));
  }
  return pr;
}

Tensor MultiHeadAttention::HeadLogits(const Projected& pr, int64_t h, int64_t tq,
                                      int64_t tk) const {
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_head_));
  Tensor q = ops::Slice(pr.q, 1, h * d_head_, d_head_);
  Tensor k = ops::Slice(pr.k, 1, h * d_head_, d_head_);
  if (!relative_) return ops::Scale(ops::MatMul(q, ops::Transpose(k)), scale);
  Tensor u = ops::Reshape(ops::Slice(pos_bias_u, 0, h, 1), {d_head_});
  Tensor v = ops::Reshape(ops::Slice(pos_bias_v, 0, h, 1), {d_head_});
  Tensor ac = ops::MatMul(ops::Add(q, u), ops::Transpose(k));
  Tensor p = ops::Slice(pr.p, 1, h * d_head_, d_head_);
  Tensor bd_full = ops::MatMul(ops::Add(q, v), ops::Transpose(p));  // [T, 2T-1]
  const int64_t width = 2 * tk - 1;
  std::vector<int64_t> idx(tq * tk);
  for (int64_t i = 0; i < tq; ++i) {
    for (int64_t j = 0; j < tk; ++j) idx[i * tk + j] = i * width + (tk - 1 - i + j);
  }
  Tensor bd = ops::Gather(bd_full, {tq, tk}, idx);
  return ops::Scale(ops::Add(ac, bd), scale);
}

Tensor MultiHeadAttention::Logits(const Tensor& q_in, const Tensor& kv_in,
                                  int64_t head) const {
  if (head < 0 || head >= n_heads_) throw ContractError("head index out of range");
  return HeadLogits(Project(q_in, kv_in), head, q_in.dim(0), kv_in.dim(0));
}

Tensor MultiHeadAttention::Forward(const Tensor& q_in, const Tensor& kv_in,
                                   std::span<const uint8_t> mask, Dropout* dropout) const {
  const int64_t tq = q_in.dim(0), tk = kv_in.dim(0);
  if (static_cast<int64_t>(mask.size()) != tq * tk) {
    throw ShapeError("multi_head_attention: mask of " + std::to_string(mask.size()) +
                     " entries for [" + std::to_string(tq) + "," + std::to_string(tk) + "]");
  }
  std::vector<uint8_t> blocked(mask.size());
  bool any_blocked = false;
  for (int64_t i = 0; i < tq; ++i) {
    bool row_ok = false;
    for (int64_t j = 0; j < tk; ++j) {
      blocked[i * tk + j] = mask[i * tk + j] ? 0 : 1;
      row_ok = row_ok || mask[i * tk + j];
      any_blocked = any_blocked || !mask[i * tk + j];
    }
    if (!row_ok) {
      throw ContractError("multi_head_attention: query row " + std::to_string(i) +
                          " has no allowed key");
    }
  }
  Projected pr = Project(q_in, kv_in);
  std::vector<Tensor> heads;
  heads.reserve(n_heads_);
  for (int64_t h = 0; h < n_heads_; ++h) {
    Tensor logits = HeadLogits(pr, h, tq, tk);
    if (any_blocked) logits = ops::MaskedFill(logits, blocked, kMaskValue);
    Tensor attn = ops::Softmax(logits);
    attn = MaybeDropout(dropout, attn);
    heads.push_back(ops::MatMul(attn, ops::Slice(pr.v, 1, h * d_head_, d_head_)));
  }
  Tensor ctx = n_heads_ == 1 ? heads[0] : ops::Concat(heads, 1);
  return w_o(ctx);
}

}  // namespace dualasr::nn
