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
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dualasr/tensor/tensor.h"

namespace dualasr::nn {

// Value used for disallowed attention logits.
inline constexpr double kMaskValue = -1e9;

// Ordered registry of named trainable tensors.
//
// Initial values depend only on (seed, name), so adding a parameter never
// perturbs the others.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed = 0, DType dtype = DType::kF32)
      : seed_(seed), dtype_(dtype) {}

  // Uniform(-limit, limit).
  Tensor Uniform(const std::string& name, Shape shape, double limit);
  // Glorot uniform for a [fan_in, fan_out] matrix.
  Tensor Xavier(const std::string& name, Shape shape);
  Tensor Constant(const std::string& name, Shape shape, double value);

  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }
  std::vector<Tensor> tensors() const;
  Tensor Find(const std::string& name) const;
  int64_t NumParameters() const;
  DType dtype() const { return dtype_; }
  uint64_t seed() const { return seed_; }

 private:
  Tensor Register(const std::string& name, Shape shape, std::vector<double> values);

  uint64_t seed_;
  DType dtype_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

// Generates dropout keep-masks from a counter-based stream.
//
// The stream key is usually derived from (seed, step, utterance, task) so
// that the masks seen by one utterance do not depend on its batch mates.
class Dropout {
 public:
  Dropout(double rate, uint64_t key);
  // Identity when rate == 0.
  Tensor Apply(const Tensor& x);
  double rate() const { return rate_; }

 private:
  double rate_;
  std::mt19937_64 rng_;
};

// Applies d->Apply(x) or returns x when d is null (inference).
Tensor MaybeDropout(Dropout* d, const Tensor& x);

struct Linear {
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int64_t in, int64_t out,
         bool bias = true);
  Tensor operator()(const Tensor& x) const;

  Tensor weight;  // [in, out]
  Tensor bias;    // [out], undefined when built without bias
};

struct LayerNormParams {
  LayerNormParams() = default;
  LayerNormParams(ParamStore& ps, const std::string& name, int64_t dim);
  Tensor operator()(const Tensor& x) const;

  Tensor gamma;
  Tensor beta;
  double eps = 1e-5;
};

enum class Activation { kRelu, kSwish };

// Linear -> activation -> dropout -> Linear.
struct FeedForward {
  FeedForward() = default;
  FeedForward(ParamStore& ps, const std::string& name, int64_t d_model, int64_t ff_dim,
              Activation act);
  Tensor Forward(const Tensor& x, Dropout* dropout) const;

  Linear w1;
  Linear w2;
  Activation act = Activation::kRelu;
};

// Absolute sinusoidal encoding rows for positions [0, length), [length, d].
Tensor SinusoidTable(int64_t length, int64_t d, DType dtype, double base = 10000.0);
// Encoding of relative distances T-1, T-2, ..., -(T-1), [2T-1, d].
Tensor RelativeSinusoidTable(int64_t length, int64_t d, DType dtype, double base = 10000.0);

// Boolean helpers; masks are row-major [rows, cols] with 1 = allowed.
std::vector<uint8_t> CausalMask(int64_t length);
std::vector<uint8_t> KeyMask(int64_t queries, int64_t keys, int64_t valid_keys);
// Zeroes rows >= valid of x [T, d].
Tensor ZeroPadRows(const Tensor& x, int64_t valid);

}  // namespace dualasr::nn
