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

#include "dualasr/nn/conformer.h"

#include <cmath>

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"

namespace dualasr::nn {

ConvModule::ConvModule(ParamStore& ps, const std::string& name, int64_t d, int64_t kernel)
    : d_model(d) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("conv kernel must be odd, got " + std::to_string(kernel));
  }
  pointwise1 = Linear(ps, name + ".pointwise1", d, 2 * d);
  depthwise_weight =
      ps.Uniform(name + ".depthwise.weight", {kernel, d}, 1.0 / std::sqrt(double(kernel)));
  depthwise_bias = ps.Constant(name + ".depthwise.bias", {d}, 0.0);
  norm = LayerNormParams(ps, name + ".norm", d);
  pointwise2 = Linear(ps, name + ".pointwise2", d, d);
}

Tensor ConvModule::Forward(const Tensor& x, int64_t valid) const {
  Tensor h = pointwise1(ZeroPadRows(x, valid));
  Tensor glu = ops::Mul(ops::Slice(h, 1, 0, d_model),
                        ops::Sigmoid(ops::Slice(h, 1, d_model, d_model)));
  glu = ZeroPadRows(glu, valid);
  Tensor c = ops::DepthwiseConv1d(glu, depthwise_weight, depthwise_bias);
  c = ZeroPadRows(c, valid);
  return pointwise2(ops::Swish(norm(c)));
}

ConformerLayer::ConformerLayer(ParamStore& ps, const std::string& name, int64_t d,
                               int64_t n_heads, int64_t ff_dim, int64_t kernel,
                               double rel_pos_base)
    : norm_ff1(ps, name + ".norm_ff1", d),
      norm_mha(ps, name + ".norm_mha", d),
      norm_conv(ps, name + ".norm_conv", d),
      norm_ff2(ps, name + ".norm_ff2", d),
      norm_final(ps, name + ".norm_final", d),
      ff1(ps, name + ".ff1", d, ff_dim, Activation::kSwish),
      ff2(ps, name + ".ff2", d, ff_dim, Activation::kSwish),
      self_attn(ps, name + ".self_attn", d, n_heads, true, rel_pos_base),
      conv(ps, name + ".conv", d, kernel) {}

Tensor ConformerLayer::Forward(const Tensor& x, int64_t valid, Dropout* dropout) const {
  if (x.rank() != 2 || x.dim(0) == 0) {
    throw ContractError("conformer_layer: expects non-empty [T,d], got " +
                        ShapeToString(x.shape()));
  }
  const int64_t t_len = x.dim(0);
  if (valid < 1 || valid > t_len) {
    throw ContractError("conformer_layer: valid length " + std::to_string(valid) +
                        " outside [1," + std::to_string(t_len) + "]");
  }
  Tensor h = ops::Add(x, ops::Scale(MaybeDropout(dropout, ff1.Forward(norm_ff1(x), dropout)), 0.5));
  Tensor hn = norm_mha(h);
  const auto mask = KeyMask(t_len, t_len, valid);
  h = ops::Add(h, MaybeDropout(dropout, self_attn.Forward(hn, hn, mask, dropout)));
  h = ops::Add(h, MaybeDropout(dropout, conv.Forward(norm_conv(h), valid)));
  h = ops::Add(h, ops::Scale(MaybeDropout(dropout, ff2.Forward(norm_ff2(h), dropout)), 0.5));
  return ZeroPadRows(norm_final(h), valid);
}

}  // namespace dualasr::nn
