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

#include "dualasr/nn/subsampling.h"

#include <cmath>

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"

namespace dualasr::nn {

Conv2dSubsampling::Conv2dSubsampling(ParamStore& ps, const std::string& name,
                                     int64_t feat_dim, int64_t d_model, int64_t channels)
    : feat_dim_(feat_dim), d_model_(d_model), channels_(channels) {
  if (feat_dim < kMinFrames) {
    throw ConfigError("feature dim " + std::to_string(feat_dim) + " too small for subsampling");
  }
  const double l1 = 1.0 / std::sqrt(9.0);
  const double l2 = 1.0 / std::sqrt(9.0 * channels);
  conv1_w = ps.Uniform(name + ".conv1.weight", {channels, 1, 3, 3}, l1);
  conv1_b = ps.Uniform(name + ".conv1.bias", {channels}, l1);
  conv2_w = ps.Uniform(name + ".conv2.weight", {channels, channels, 3, 3}, l2);
  conv2_b = ps.Uniform(name + ".conv2.bias", {channels}, l2);
  out = Linear(ps, name + ".out", channels * OutputFeatureDim(feat_dim), d_model);
}

int64_t Conv2dSubsampling::OutputLength(int64_t t) {
  if (t < kMinFrames) {
    throw LengthError("subsampling needs at least " + std::to_string(kMinFrames) +
                      " frames, got " + std::to_string(t));
  }
  return ((t - 1) / 2 - 1) / 2;
}

int64_t Conv2dSubsampling::OutputFeatureDim(int64_t f) { return ((f - 1) / 2 - 1) / 2; }

Tensor Conv2dSubsampling::Forward(const Tensor& features) const {
  if (features.rank() != 2 || features.dim(1) != feat_dim_) {
    throw ShapeError("subsample: expected [T," + std::to_string(feat_dim_) + "], got " +
                     ShapeToString(features.shape()));
  }
  const int64_t t_out = OutputLength(features.dim(0));
  const int64_t f_out = OutputFeatureDim(feat_dim_);
  Tensor x = ops::Reshape(features, {1, features.dim(0), feat_dim_});
  x = ops::Relu(ops::Conv2d(x, conv1_w, conv1_b, 2));
  x = ops::Relu(ops::Conv2d(x, conv2_w, conv2_b, 2));  // [C, T', F']
  std::vector<int64_t> idx(t_out * channels_ * f_out);
  size_t n = 0;
  for (int64_t t = 0; t < t_out; ++t) {
    for (int64_t c = 0; c < channels_; ++c) {
      for (int64_t f = 0; f < f_out; ++f) idx[n++] = (c * t_out + t) * f_out + f;
    }
  }
  Tensor flat = ops::Gather(x, {t_out, channels_ * f_out}, idx);
  return ops::Scale(out(flat), std::sqrt(static_cast<double>(d_model_)));
}

}  // namespace dualasr::nn
