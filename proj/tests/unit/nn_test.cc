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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dualasr/errors.h"
#include "dualasr/nn/attention.h"
#include "dualasr/nn/conformer.h"
#include "dualasr/nn/subsampling.h"
#include "dualasr/nn/transformer.h"
#include "dualasr/tensor/gradcheck.h"
#include "dualasr/tensor/ops.h"
#include "oracles/oracles.h"

namespace dualasr::nn {
namespace {

using oracle::Mat;
using oracle::RandomTensor;
using oracle::ToMat;
using oracle::WeightedSum;

void Fill(Tensor t, double value) {
  for (double& v : t.mutable_data()) v = value;
}

void CopyValues(Tensor dst, const Tensor& src) {
  auto d = dst.mutable_data();
  std::copy(src.data().begin(), src.data().end(), d.begin());
}

void ExpectNear(const Tensor& a, const Mat& b, double tol) {
  ASSERT_EQ(a.numel(), static_cast<int64_t>(b.v.size()));
  for (int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.data()[i], b.v[i], tol) << i;
}

void ExpectEqualTensors(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], tol) << i;
}

// Sinusoid base of the desk configuration's relative position table.
constexpr double kDeskRelPosBase = 100.0;

std::vector<Tensor> Leaves(const ParamStore& ps) { return ps.tensors(); }

TEST(AttentionTest, SingleKeyIsValueProjection) {
  ParamStore ps(1, DType::kF64);
  MultiHeadAttention mha(ps, "mha", 4, 2, false);
  std::mt19937_64 rng(2);
  Tensor q = RandomTensor({1, 4}, rng), kv = RandomTensor({1, 4}, rng);
  Tensor out = mha.Forward(q, kv, std::vector<uint8_t>{1}, nullptr);
  Tensor expect = mha.w_o(mha.w_v(kv));
  ExpectEqualTensors(out, expect, 1e-12);
}

TEST(AttentionTest, IdenticalKeysGetEqualWeights) {
  ParamStore ps(3, DType::kF64);
  MultiHeadAttention mha(ps, "mha", 4, 2, false);
  std::mt19937_64 rng(4);
  Tensor q = RandomTensor({2, 4}, rng), k1 = RandomTensor({1, 4}, rng);
  std::vector<Tensor> two = {k1, k1};
  Tensor kv = ops::Concat(two, 0);
  for (int64_t h = 0; h < 2; ++h) {
    Tensor logits = mha.Logits(q, kv, h);
    Tensor w = ops::Softmax(logits);
    for (int64_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(w.at({i, 0}), 0.5, 1e-12);
      EXPECT_NEAR(w.at({i, 1}), 0.5, 1e-12);
    }
  }
}

TEST(AttentionTest, MatchesNaiveLoop) {
  ParamStore ps(5, DType::kF64);
  MultiHeadAttention mha(ps, "mha", 8, 2, false);
  std::mt19937_64 rng(6);
  Tensor q = RandomTensor({3, 8}, rng), kv = RandomTensor({4, 8}, rng);
  std::vector<uint8_t> mask = {1, 1, 0, 1, 1, 0, 0, 0, 1, 1, 1, 1};
  ExpectNear(mha.Forward(q, kv, mask, nullptr),
             oracle::NaiveAttention(mha, ToMat(q), ToMat(kv), mask), 1e-6);
}

TEST(AttentionTest, RelativeMatchesNaiveLoop) {
  ParamStore ps(7, DType::kF64);
  MultiHeadAttention mha(ps, "mha", 8, 2, true);
  std::mt19937_64 rng(8);
  Tensor x = RandomTensor({4, 8}, rng);
  std::vector<uint8_t> mask(16, 1);
  mask[3] = mask[7] = 0;
  ExpectNear(mha.Forward(x, x, mask, nullptr),
             oracle::NaiveAttention(mha, ToMat(x), ToMat(x), mask), 1e-6);
}

TEST(AttentionTest, FullyMaskedRowIsContractError) {
  ParamStore ps(9, DType::kF64);
  MultiHeadAttention mha(ps, "mha", 4, 2, false);
  Tensor x = Tensor::Zeros({2, 4});
  EXPECT_THROW(mha.Forward(x, x, std::vector<uint8_t>{1, 0, 0, 0}, nullptr), ContractError);
}

TEST(AttentionTest, IndivisibleHeadsIsConfigError) {
  ParamStore ps(9, DType::kF64);
  EXPECT_THROW(MultiHeadAttention(ps, "mha", 6, 4, false), ConfigError);
}

TEST(AttentionTest, RelativeLogitsAreTranslationInvariant) {
  ParamStore ps(10, DType::kF64);
  MultiHeadAttention mha(ps, "mha", 8, 2, true);
  std::mt19937_64 rng(11);
  for (int shift = 1; shift <= 3; ++shift) {
    Tensor x = RandomTensor({5, 8}, rng);
    std::vector<Tensor> parts = {RandomTensor({shift, 8}, rng), x};
    Tensor shifted = ops::Concat(parts, 0);
    for (int64_t h = 0; h < 2; ++h) {
      Tensor a = mha.Logits(x, x, h);
      Tensor b = mha.Logits(shifted, shifted, h);
      for (int64_t i = 0; i < 5; ++i) {
        for (int64_t j = 0; j < 5; ++j) EXPECT_NEAR(a.at({i, j}), b.at({i + shift, j + shift}), 1e-9);
      }
    }
  }
}

TEST(AttentionTest, GradientCheck) {
  ParamStore ps(12, DType::kF64);
  MultiHeadAttention mha(ps, "mha", 8, 2, true, kDeskRelPosBase);
  std::mt19937_64 rng(13);
  std::vector<Tensor> p = Leaves(ps);
  p.push_back(RandomTensor({4, 8}, rng));
  std::vector<uint8_t> mask(16, 1);
  mask[15] = 0;
  Tensor& x = p.back();
  EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(mha.Forward(x, x, mask, nullptr), 1); }, p),
            1e-4);
}

TEST(ConformerTest, ZeroInputZeroBranchesGivesZero) {
  ParamStore ps(14, DType::kF64);
  ConformerLayer layer(ps, "enc", 8, 2, 16, 3);
  for (Tensor t : {layer.ff1.w2.weight, layer.ff2.w2.weight, layer.conv.pointwise2.weight,
                   layer.self_attn.w_o.weight}) {
    Fill(t, 0.0);
  }
  Tensor y = layer.Forward(Tensor::Zeros({5, 8}), 5, nullptr);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(ConformerTest, PaddedRowsStayZero) {
  ParamStore ps(15, DType::kF64);
  ConformerLayer layer(ps, "enc", 8, 2, 16, 3);
  std::mt19937_64 rng(16);
  Tensor x = RandomTensor({5, 8}, rng);
  Tensor y = layer.Forward(x, 3, nullptr);
  for (int64_t t = 3; t < 5; ++t) {
    for (int64_t c = 0; c < 8; ++c) EXPECT_EQ(y.at({t, c}), 0.0);
  }
  // Pad content must not leak into valid frames.
  Tensor x2 = x.Clone();
  for (int64_t i = 3 * 8; i < 5 * 8; ++i) x2.mutable_data()[i] = 100.0 + i;
  Tensor y2 = layer.Forward(x2, 3, nullptr);
  for (int64_t i = 0; i < 3 * 8; ++i) EXPECT_EQ(y.data()[i], y2.data()[i]);
}

TEST(ConformerTest, EmptyInputIsContractError) {
  ParamStore ps(17, DType::kF64);
  ConformerLayer layer(ps, "enc", 8, 2, 16, 3);
  EXPECT_THROW(layer.Forward(Tensor::Zeros({0, 8}), 0, nullptr), ContractError);
}

TEST(ConformerTest, EvenKernelIsConfigError) {
  ParamStore ps(17, DType::kF64);
  EXPECT_THROW(ConformerLayer(ps, "enc", 8, 2, 16, 4), ConfigError);
}

TEST(ConformerTest, GradientCheck) {
  ParamStore ps(18, DType::kF64);
  ConformerLayer layer(ps, "enc", 8, 2, 16, 3, kDeskRelPosBase);
  std::mt19937_64 rng(19);
  std::vector<Tensor> p = Leaves(ps);
  p.push_back(RandomTensor({6, 8}, rng));
  Tensor& x = p.back();
  EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(layer.Forward(x, 5, nullptr), 2); }, p),
            1e-4);
}

TEST(DecoderLayerTest, MatchesNaiveLoop) {
  ParamStore ps(20, DType::kF64);
  DecoderLayer layer(ps, "dec", 8, 2, 16, 1);
  std::mt19937_64 rng(21);
  Tensor y = RandomTensor({3, 8}, rng), mem = RandomTensor({4, 8}, rng);
  std::vector<Memory> m = {{mem, 4}};
  ExpectNear(layer.Forward(y, m, nullptr), oracle::NaiveDecoderLayer(layer, ToMat(y), {ToMat(mem)}),
             1e-6);
}

TEST(DecoderLayerTest, MultiMatchesNaiveLoop) {
  ParamStore ps(22, DType::kF64);
  DecoderLayer layer(ps, "dec", 8, 2, 16, 2);
  std::mt19937_64 rng(23);
  Tensor y = RandomTensor({3, 8}, rng), m1 = RandomTensor({4, 8}, rng),
         m2 = RandomTensor({2, 8}, rng);
  std::vector<Memory> m = {{m1, 4}, {m2, 2}};
  ExpectNear(layer.Forward(y, m, nullptr),
             oracle::NaiveDecoderLayer(layer, ToMat(y), {ToMat(m1), ToMat(m2)}), 1e-6);
}

TEST(DecoderLayerTest, SingleTokenSelfAttentionIsValueProjection) {
  ParamStore ps(24, DType::kF64);
  DecoderLayer layer(ps, "dec", 8, 2, 16, 1);
  std::mt19937_64 rng(25);
  Tensor y = RandomTensor({1, 8}, rng);
  Tensor yn = layer.norm_self(y);
  Tensor sa = layer.self_attn.Forward(yn, yn, CausalMask(1), nullptr);
  ExpectEqualTensors(sa, layer.self_attn.w_o(layer.self_attn.w_v(yn)), 1e-12);
}

TEST(DecoderLayerTest, Causality) {
  for (int sources : {1, 2}) {
    ParamStore ps(26, DType::kF64);
    DecoderLayer layer(ps, "dec", 8, 2, 16, sources);
    std::mt19937_64 rng(27);
    Tensor y = RandomTensor({5, 8}, rng);
    std::vector<Memory> m = {{RandomTensor({4, 8}, rng), 4}, {RandomTensor({3, 8}, rng), 3}};
    m.resize(sources);
    Tensor base = layer.Forward(y, m, nullptr);
    for (int64_t j = 1; j < 5; ++j) {
      Tensor y2 = y.Clone();
      for (int64_t c = 0; c < 8; ++c) y2.mutable_data()[j * 8 + c] += 3.0;
      Tensor out = layer.Forward(y2, m, nullptr);
      for (int64_t i = 0; i < j * 8; ++i) EXPECT_EQ(base.data()[i], out.data()[i]);
    }
  }
}

TEST(DecoderLayerTest, ZeroSecondCrossEqualsSingleCross) {
  ParamStore ps1(28, DType::kF64), ps2(28, DType::kF64);
  DecoderLayer multi(ps1, "dec", 8, 2, 16, 2);
  DecoderLayer single(ps2, "dec", 8, 2, 16, 1);
  Fill(multi.cross[1].w_o.weight, 0.0);
  Fill(multi.cross[1].w_o.bias, 0.0);
  std::mt19937_64 rng(29);
  Tensor y = RandomTensor({3, 8}, rng), m1 = RandomTensor({4, 8}, rng),
         m2 = RandomTensor({5, 8}, rng);
  std::vector<Memory> mm = {{m1, 4}, {m2, 5}};
  std::vector<Memory> ms = {{m1, 4}};
  ExpectEqualTensors(multi.Forward(y, mm, nullptr), single.Forward(y, ms, nullptr), 1e-12);
}

TEST(DecoderLayerTest, TiedCrossOnSameMemoryAppliesTwice) {
  ParamStore ps(30, DType::kF64);
  DecoderLayer layer(ps, "dec", 8, 2, 16, 2);
  const auto& params = ps.params();
  for (const auto& [name, t] : params) {
    const auto pos = name.find(".cross2.");
    if (pos == std::string::npos) continue;
    std::string src = name;
    src.replace(pos, 8, ".cross1.");
    CopyValues(t, ps.Find(src));
  }
  std::mt19937_64 rng(31);
  Tensor y = RandomTensor({3, 8}, rng), mem = RandomTensor({4, 8}, rng);
  std::vector<Memory> m = {{mem, 4}, {mem, 4}};
  Tensor out = layer.Forward(y, m, nullptr);
  Tensor yn = layer.norm_self(y);
  Tensor h = ops::Add(y, layer.self_attn.Forward(yn, yn, CausalMask(3), nullptr));
  const auto all = KeyMask(3, 4, 4);
  for (int rep = 0; rep < 2; ++rep) {
    h = ops::Add(h, layer.cross[0].Forward(layer.norm_cross[0](h), mem, all, nullptr));
  }
  h = ops::Add(h, layer.ff.Forward(layer.norm_ff(h), nullptr));
  ExpectEqualTensors(out, h, 1e-12);
}

TEST(DecoderLayerTest, GradientReachesBothMemories) {
  ParamStore ps(32, DType::kF64);
  DecoderLayer layer(ps, "dec", 8, 2, 16, 2);
  std::mt19937_64 rng(33);
  Tensor y = RandomTensor({3, 8}, rng);
  Tensor m1 = RandomTensor({4, 8}, rng, 1.0, true), m2 = RandomTensor({2, 8}, rng, 1.0, true);
  std::vector<Memory> m = {{m1, 4}, {m2, 2}};
  Tape tape;
  TapeScope scope(tape);
  tape.Backward(WeightedSum(layer.Forward(y, m, nullptr), 3));
  double n1 = 0.0, n2 = 0.0;
  for (double g : m1.grad()) n1 += std::abs(g);
  for (double g : m2.grad()) n2 += std::abs(g);
  EXPECT_GT(n1, 0.0);
  EXPECT_GT(n2, 0.0);
}

TEST(DecoderLayerTest, EmptyMemoryIsContractError) {
  ParamStore ps(34, DType::kF64);
  DecoderLayer layer(ps, "dec", 8, 2, 16, 2);
  std::vector<Memory> m = {{Tensor::Zeros({4, 8}), 4}, {Tensor::Zeros({0, 8}), 0}};
  EXPECT_THROW(layer.Forward(Tensor::Zeros({2, 8}), m, nullptr), ContractError);
}

TEST(DecoderLayerTest, GradientCheck) {
  for (int sources : {1, 2}) {
    ParamStore ps(35, DType::kF64);
    DecoderLayer layer(ps, "dec", 8, 2, 16, sources);
    std::mt19937_64 rng(36);
    std::vector<Tensor> p = Leaves(ps);
    p.push_back(RandomTensor({3, 8}, rng));
    p.push_back(RandomTensor({4, 8}, rng));
    p.push_back(RandomTensor({3, 8}, rng));
    auto f = [&] {
      std::vector<Memory> m = {{p[p.size() - 2], 3}, {p[p.size() - 1], 3}};
      m.resize(sources);
      return WeightedSum(layer.Forward(p[p.size() - 3], m, nullptr), 4);
    };
    EXPECT_LT(FiniteDifferenceCheck(f, p), 1e-4) << sources;
  }
}

TEST(EncoderLayerTest, GradientCheckAndPadding) {
  ParamStore ps(37, DType::kF64);
  EncoderLayer layer(ps, "sub", 8, 2, 16);
  std::mt19937_64 rng(38);
  std::vector<Tensor> p = Leaves(ps);
  p.push_back(RandomTensor({5, 8}, rng));
  Tensor& x = p.back();
  Tensor y = layer.Forward(x, 4, nullptr);
  for (int64_t c = 0; c < 8; ++c) EXPECT_EQ(y.at({4, c}), 0.0);
  EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(layer.Forward(x, 4, nullptr), 5); }, p),
            1e-4);
}

TEST(SubsamplingTest, LengthFormula) {
  EXPECT_EQ(Conv2dSubsampling::OutputLength(16), 3);
  EXPECT_EQ(Conv2dSubsampling::OutputLength(7), 1);
  EXPECT_THROW(Conv2dSubsampling::OutputLength(6), LengthError);
  try {
    Conv2dSubsampling::OutputLength(5);
  } catch (const LengthError& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

TEST(SubsamplingTest, LengthFunctionMatchesConvolutions) {
  ParamStore ps(39, DType::kF64);
  Conv2dSubsampling sub(ps, "sub", 9, 4, 2);
  std::mt19937_64 rng(40);
  for (int64_t t = 8; t <= 64; ++t) {
    Tensor y = sub.Forward(RandomTensor({t, 9}, rng));
    EXPECT_EQ(y.dim(0), Conv2dSubsampling::OutputLength(t)) << t;
    EXPECT_EQ(y.dim(1), 4);
  }
}

TEST(SubsamplingTest, BaseConfigHiddenDim) {
  ParamStore ps(41, DType::kF32);
  Conv2dSubsampling sub(ps, "sub", 83, 256, 256);
  std::mt19937_64 rng(42);
  Tensor y = sub.Forward(RandomTensor({16, 83}, rng).To(DType::kF32));
  EXPECT_EQ(y.shape(), (Shape{3, 256}));
  EXPECT_EQ(Conv2dSubsampling::OutputFeatureDim(83), 20);
}

TEST(SubsamplingTest, GradientCheck) {
  ParamStore ps(43, DType::kF64);
  Conv2dSubsampling sub(ps, "sub", 9, 4, 2);
  std::mt19937_64 rng(44);
  std::vector<Tensor> p = Leaves(ps);
  p.push_back(RandomTensor({11, 9}, rng));
  Tensor& x = p.back();
  EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(sub.Forward(x), 6); }, p), 1e-4);
}

TEST(DropoutTest, SameKeySameMask) {
  std::mt19937_64 rng(45);
  Tensor x = RandomTensor({4, 6}, rng);
  Dropout a(0.3, 99), b(0.3, 99), c(0.3, 100);
  Tensor ya = a.Apply(x), yb = b.Apply(x), yc = c.Apply(x);
  EXPECT_TRUE(std::equal(ya.data().begin(), ya.data().end(), yb.data().begin()));
  EXPECT_FALSE(std::equal(ya.data().begin(), ya.data().end(), yc.data().begin()));
}

TEST(ParamStoreTest, SameSeedSameValues) {
  ParamStore a(7, DType::kF32), b(7, DType::kF32);
  ConformerLayer la(a, "enc", 8, 2, 16, 3), lb(b, "enc", 8, 2, 16, 3);
  ASSERT_EQ(a.params().size(), b.params().size());
  for (size_t i = 0; i < a.params().size(); ++i) {
    const Tensor& x = a.params()[i].second;
    const Tensor& y = b.params()[i].second;
    EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
  }
}

}  // namespace
}  // namespace dualasr::nn
