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

#include "dualasr/nn/transformer.h"

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"

namespace dualasr::nn {

DecoderLayer::DecoderLayer(ParamStore& ps, const std::string& name, int64_t d,
                           int64_t n_heads, int64_t ff_dim, int n_sources)
    : norm_self(ps, name + ".norm_self", d),
      self_attn(ps, name + ".self_attn", d, n_heads, false) {
  if (n_sources < 1 || n_sources > 2) {
    throw ConfigError("decoder layer supports 1 or 2 memories, got " +
                      std::to_string(n_sources));
  }
  for (int s = 0; s < n_sources; ++s) {
    const std::string tag = name + ".cross" + std::to_string(s + 1);
    norm_cross.emplace_back(ps, tag + ".norm", d);
    cross.emplace_back(ps, tag + ".attn", d, n_heads, false);
  }
  norm_ff = LayerNormParams(ps, name + ".norm_ff", d);
  ff = FeedForward(ps, name + ".ff", d, ff_dim, Activation::kRelu);
}

Tensor DecoderLayer::Forward(const Tensor& y, std::span<const Memory> memories,
                             Dropout* dropout) const {
  if (static_cast<int>(memories.size()) != n_sources()) {
    throw ContractError("decoder layer expects " + std::to_string(n_sources()) +
                        " memories, got " + std::to_string(memories.size()));
  }
  const int64_t len = y.dim(0);
  if (len == 0) throw ContractError("decoder layer: empty target prefix");
  Tensor yn = norm_self(y);
  Tensor h = ops::Add(y, MaybeDropout(dropout, self_attn.Forward(yn, yn, CausalMask(len), dropout)));
  for (size_t s = 0; s < cross.size(); ++s) {
    const Memory& m = memories[s];
    if (!m.states.defined() || m.states.dim(0) == 0 || m.valid < 1) {
      throw ContractError("decoder layer: memory " + std::to_string(s + 1) + " is empty");
    }
    const auto mask = KeyMask(len, m.states.dim(0), m.valid);
    h = ops::Add(h, MaybeDropout(dropout,
                                 cross[s].Forward(norm_cross[s](h), m.states, mask, dropout)));
  }
  return ops::Add(h, MaybeDropout(dropout, ff.Forward(norm_ff(h), dropout)));
}

EncoderLayer::EncoderLayer(ParamStore& ps, const std::string& name, int64_t d,
                           int64_t n_heads, int64_t ff_dim)
    : norm_self(ps, name + ".norm_self", d),
      self_attn(ps, name + ".self_attn", d, n_heads, false),
      norm_ff(ps, name + ".norm_ff", d),
      ff(ps, name + ".ff", d, ff_dim, Activation::kRelu) {}

Tensor EncoderLayer::Forward(const Tensor& x, int64_t valid, Dropout* dropout) const {
  if (x.rank() != 2 || x.dim(0) == 0) {
    throw ContractError("encoder layer: expects non-empty [T,d]");
  }
  const int64_t t_len = x.dim(0);
  Tensor xn = norm_self(x);
  const auto mask = KeyMask(t_len, t_len, valid);
  Tensor h = ops::Add(x, MaybeDropout(dropout, self_attn.Forward(xn, xn, mask, dropout)));
  h = ops::Add(h, MaybeDropout(dropout, ff.Forward(norm_ff(h), dropout)));
  return ZeroPadRows(h, valid);
}

}  // namespace dualasr::nn
