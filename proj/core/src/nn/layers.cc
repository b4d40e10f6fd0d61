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

#include "dualasr/nn/layers.h"

#include <cmath>

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"
#include "dualasr/util/hash.h"

namespace dualasr::nn {

Tensor ParamStore::Register(const std::string& name, Shape shape,
                            std::vector<double> values) {
  for (const auto& [n, t] : params_) {
    if (n == name) throw ConfigError("duplicate parameter name '" + name + "'");
  }
  Tensor t(std::move(shape), std::move(values), dtype_, true);
  params_.emplace_back(name, t);
  return t;
}

Tensor ParamStore::Uniform(const std::string& name, Shape shape, double limit) {
  std::mt19937_64 rng(HashCombine(seed_, Fnv1a64(name)));
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = (2.0 * UniformUnit(rng) - 1.0) * limit;
  return Register(name, std::move(shape), std::move(v));
}

Tensor ParamStore::Xavier(const std::string& name, Shape shape) {
  if (shape.size() != 2) throw ShapeError("xavier init expects a matrix for " + name);
  const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  return Uniform(name, std::move(shape), limit);
}

Tensor ParamStore::Constant(const std::string& name, Shape shape, double value) {
  std::vector<double> v(NumElements(shape), value);
  return Register(name, std::move(shape), std::move(v));
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.second);
  return out;
}

Tensor ParamStore::Find(const std::string& name) const {
  for (const auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw ContractError("no parameter named '" + name + "'");
}

int64_t ParamStore::NumParameters() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.second.numel();
  return n;
}

Dropout::Dropout(double rate, uint64_t key) : rate_(rate), rng_(Mix64(key)) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
}

Tensor Dropout::Apply(const Tensor& x) {
  if (rate_ == 0.0) return x;
  const double scale = 1.0 / (1.0 - rate_);
  std::vector<double> m(x.numel());
  for (double& v : m) v = UniformUnit(rng_) < rate_ ? 0.0 : scale;
  return ops::DropoutMaskApply(x, Tensor(x.shape(), std::move(m), x.dtype()));
}

Tensor MaybeDropout(Dropout* d, const Tensor& x) { return d ? d->Apply(x) : x; }

Linear::Linear(ParamStore& ps, const std::string& name, int64_t in, int64_t out,
               bool with_bias) {
  weight = ps.Xavier(name + ".weight", {in, out});
  if (with_bias) bias = ps.Constant(name + ".bias", {out}, 0.0);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = ops::MatMul(x, weight);
  return bias.defined() ? ops::Add(y, bias) : y;
}

LayerNormParams::LayerNormParams(ParamStore& ps, const std::string& name, int64_t dim) {
  gamma = ps.Constant(name + ".gamma", {dim}, 1.0);
  beta = ps.Constant(name + ".beta", {dim}, 0.0);
}

Tensor LayerNormParams::operator()(const Tensor& x) const {
  return ops::LayerNorm(x, gamma, beta, eps);
}

FeedForward::FeedForward(ParamStore& ps, const std::string& name, int64_t d_model,
                         int64_t ff_dim, Activation a)
    : w1(ps, name + ".w1", d_model, ff_dim), w2(ps, name + ".w2", ff_dim, d_model), act(a) {}

Tensor FeedForward::Forward(const Tensor& x, Dropout* dropout) const {
  Tensor h = w1(x);
  h = act == Activation::kSwish ? ops::Swish(h) : ops::Relu(h);
  return w2(MaybeDropout(dropout, h));
}

namespace {

void FillSinusoid(double pos, int64_t d, double base, double* row) {
  for (int64_t i = 0; i < d; i += 2) {
    const double freq = std::exp(-std::log(base) * static_cast<double>(i) / d);
    row[i] = std::sin(pos * freq);
    if (i + 1 < d) row[i + 1] = std::cos(pos * freq);
  }
}

}  // namespace

Tensor SinusoidTable(int64_t length, int64_t d, DType dtype, double base) {
  std::vector<double> v(length * d);
  for (int64_t t = 0; t < length; ++t) FillSinusoid(static_cast<double>(t), d, base, &v[t * d]);
  return Tensor({length, d}, std::move(v), dtype);
}

Tensor RelativeSinusoidTable(int64_t length, int64_t d, DType dtype, double base) {
  const int64_t rows = 2 * length - 1;
  std::vector<double> v(rows * d);
  for (int64_t k = 0; k < rows; ++k) {
    FillSinusoid(static_cast<double>(length - 1 - k), d, base, &v[k * d]);
  }
  return Tensor({rows, d}, std::move(v), dtype);
}

std::vector<uint8_t> CausalMask(int64_t length) {
  std::vector<uint8_t> m(length * length, 0);
  for (int64_t i = 0; i < length; ++i) {
    for (int64_t j = 0; j <= i; ++j) m[i * length + j] = 1;
  }
  return m;
}

std::vector<uint8_t> KeyMask(int64_t queries, int64_t keys, int64_t valid_keys) {
  std::vector<uint8_t> m(queries * keys, 0);
  for (int64_t i = 0; i < queries; ++i) {
    for (int64_t j = 0; j < std::min(keys, valid_keys); ++j) m[i * keys + j] = 1;
  }
  return m;
}

Tensor ZeroPadRows(const Tensor& x, int64_t valid) {
  const int64_t t_len = x.dim(0);
  if (valid >= t_len) return x;
  std::vector<uint8_t> mask(x.numel(), 0);
  const int64_t d = x.numel() / t_len;
  std::fill(mask.begin() + valid * d, mask.end(), 1);
  return ops::MaskedFill(x, mask, 0.0);
}

}  // namespace dualasr::nn
