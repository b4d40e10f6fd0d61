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
#include "dualasr/tensor/gradcheck.h"
#include "dualasr/tensor/ops.h"
#include "oracles/oracles.h"

namespace dualasr {
namespace {

using oracle::RandomTensor;
using oracle::WeightedSum;

TEST(TensorTest, MatMulIdentity) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor i({2, 2}, {1, 0, 0, 1});
  Tensor y = ops::MatMul(a, i);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            (std::vector<double>{1, 2, 3, 4}));
}

TEST(TensorTest, LogSoftmaxSymmetric) {
  Tensor y = ops::LogSoftmax(Tensor({2}, {0, 0}));
  EXPECT_NEAR(y.at({0}), -std::log(2.0), 1e-12);
  EXPECT_NEAR(y.at({1}), -std::log(2.0), 1e-12);
}

TEST(TensorTest, LayerNormHandValue) {
  Tensor x({3}, {1, 2, 3});
  Tensor y = ops::LayerNorm(x, Tensor({3}, {1, 1, 1}), Tensor({3}, {0, 0, 0}), 1e-5);
  const double expect = 1.0 / std::sqrt(2.0 / 3.0 + 1e-5);
  EXPECT_NEAR(y.at({0}), -expect, 1e-9);
  EXPECT_NEAR(y.at({1}), 0.0, 1e-12);
  EXPECT_NEAR(y.at({2}), expect, 1e-9);
  EXPECT_NEAR(expect, 1.2247, 1e-4);
}

TEST(TensorTest, ShapeErrorNamesOp) {
  try {
    ops::MatMul(Tensor::Zeros({2, 3}), Tensor::Zeros({2, 3}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[2,3]"), std::string::npos);
  }
}

TEST(TensorTest, NonFiniteOutputThrows) {
  Tensor x({1}, {1e300});
  EXPECT_THROW(ops::Mul(x, x), NumericError);
}

TEST(TensorTest, BackwardSquare) {
  Tensor w({1}, {3}, DType::kF64, true);
  Tape tape;
  TapeScope scope(tape);
  tape.Backward(ops::Sum(ops::Mul(w, w)));
  EXPECT_DOUBLE_EQ(w.grad()[0], 6.0);
}

TEST(TensorTest, BackwardLogSoftmaxClosedForm) {
  Tensor z({2}, {0, 0}, DType::kF64, true);
  Tape tape;
  TapeScope scope(tape);
  tape.Backward(ops::Sum(ops::Slice(ops::LogSoftmax(z), 0, 0, 1)));
  EXPECT_NEAR(z.grad()[0], 0.5, 1e-12);
  EXPECT_NEAR(z.grad()[1], -0.5, 1e-12);
}

TEST(TensorTest, DoubleBackwardIsContractError) {
  Tensor w({1}, {3}, DType::kF64, true);
  Tape tape;
  TapeScope scope(tape);
  Tensor loss = ops::Sum(ops::Mul(w, w));
  tape.Backward(loss);
  EXPECT_THROW(tape.Backward(loss), ContractError);
}

TEST(TensorTest, NonScalarBackwardIsContractError) {
  Tensor w({2}, {3, 4}, DType::kF64, true);
  Tape tape;
  TapeScope scope(tape);
  EXPECT_THROW(tape.Backward(ops::Mul(w, w)), ContractError);
}

TEST(TensorTest, StaleLossAfterResetRejected) {
  Tensor w({1}, {3}, DType::kF64, true);
  Tape tape;
  TapeScope scope(tape);
  Tensor loss = ops::Sum(ops::Mul(w, w));
  tape.Reset();
  EXPECT_THROW(tape.Backward(loss), ContractError);
}

TEST(TensorTest, MeanMatMulMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::vector<Tensor> p = {RandomTensor({2, 3}, rng), RandomTensor({3, 2}, rng)};
  const double err =
      FiniteDifferenceCheck([&] { return ops::Mean(ops::MatMul(p[0], p[1])); }, p);
  EXPECT_LT(err, 1e-4);
}

TEST(TensorTest, FiniteDifferenceSquare) {
  std::vector<Tensor> p = {Tensor({1}, {3.0})};
  EXPECT_LT(FiniteDifferenceCheck([&] { return ops::Sum(ops::Mul(p[0], p[0])); }, p),
            1e-8);
}

TEST(TensorTest, FiniteDifferenceRejectsNondeterminism) {
  std::vector<Tensor> p = {Tensor({1}, {3.0})};
  int calls = 0;
  auto f = [&] { return ops::Scale(ops::Sum(p[0]), 1.0 + (calls++)); };
  EXPECT_THROW(FiniteDifferenceCheck(f, p), ContractError);
}

TEST(TensorTest, FiniteDifferenceRejectsF32) {
  std::vector<Tensor> p = {Tensor({1}, {3.0}, DType::kF32)};
  EXPECT_THROW(FiniteDifferenceCheck([&] { return ops::Sum(p[0]); }, p), ContractError);
}

TEST(TensorTest, F32OutputsAreRounded) {
  Tensor a({1}, {0.1}, DType::kF32);
  EXPECT_EQ(a.data()[0], static_cast<double>(0.1f));
  Tensor y = ops::Scale(a, 3.0);
  EXPECT_EQ(y.data()[0], static_cast<double>(static_cast<float>(3.0 * 0.1f)));
  EXPECT_EQ(y.dtype(), DType::kF32);
}

// Gradient checks for every primitive at random shapes.
class PrimitiveGradTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng_{1234};

  Tensor R(const Shape& s, double scale = 1.0) { return RandomTensor(s, rng_, scale); }
};

TEST_F(PrimitiveGradTest, Elementwise) {
  for (const Shape& s : {Shape{3}, Shape{2, 3}, Shape{2, 2, 3}, Shape{2, 1, 2, 3}}) {
    std::vector<Tensor> p = {R(s), R(Shape(s.end() - 1, s.end()))};
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::Add(p[0], p[1]), 1); }, p),
              1e-4);
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::Sub(p[0], p[1]), 2); }, p),
              1e-4);
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::Mul(p[0], p[1]), 3); }, p),
              1e-4);
    EXPECT_LT(FiniteDifferenceCheck(
                  [&] { return WeightedSum(ops::AddScalar(ops::Scale(p[0], 1.7), 0.3), 4); }, p),
              1e-4);
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::Swish(p[0]), 5); }, p), 1e-4);
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::Sigmoid(p[0]), 6); }, p),
              1e-4);
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::Relu(p[0]), 7); }, p), 1e-4);
  }
}

TEST_F(PrimitiveGradTest, SoftmaxFamily) {
  for (const Shape& s : {Shape{4}, Shape{3, 4}, Shape{2, 3, 4}, Shape{2, 2, 1, 5}}) {
    std::vector<Tensor> p = {R(s, 2.0)};
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::LogSoftmax(p[0]), 1); }, p),
              1e-4);
    EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::Softmax(p[0]), 2); }, p),
              1e-4);
  }
}

TEST_F(PrimitiveGradTest, LayerNorm) {
  std::vector<Tensor> p = {R({2, 3, 5}), R({5}), R({5})};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::LayerNorm(p[0], p[1], p[2]), 1); }, p),
            1e-4);
}

TEST_F(PrimitiveGradTest, ShapeOps) {
  std::vector<Tensor> p = {R({2, 3, 4}), R({2, 2, 4})};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] {
                  std::vector<Tensor> xs = {p[0], p[1]};
                  return WeightedSum(ops::Concat(xs, 1), 1);
                },
                p),
            1e-4);
  EXPECT_LT(
      FiniteDifferenceCheck([&] { return WeightedSum(ops::Slice(p[0], 2, 1, 2), 2); }, p),
      1e-4);
  EXPECT_LT(
      FiniteDifferenceCheck([&] { return WeightedSum(ops::Reshape(p[0], {6, 4}), 3); }, p),
      1e-4);
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::Transpose(ops::Reshape(p[0], {6, 4})), 4); }, p),
            1e-4);
  EXPECT_LT(FiniteDifferenceCheck([&] { return ops::Mean(p[0]); }, p), 1e-4);
}

TEST_F(PrimitiveGradTest, IndexingOps) {
  std::vector<Tensor> p = {R({5, 3})};
  const std::vector<int64_t> ids = {4, 0, 4, 2};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::EmbeddingLookup(p[0], ids), 1); }, p),
            1e-4);
  const std::vector<int64_t> idx = {0, 14, -1, 3, 3, 7};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::Gather(p[0], {2, 3}, idx, -5.0), 2); }, p),
            1e-4);
  EXPECT_LT(FiniteDifferenceCheck([&] { return WeightedSum(ops::LogSumExpRows(p[0]), 3); }, p),
            1e-4);
  const std::vector<uint8_t> mask = {1, 0, 0};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::MaskedFill(p[0], mask, -3.0), 4); }, p),
            1e-4);
  Tensor keep({5, 3}, {0, 2, 2, 2, 0, 2, 2, 2, 2, 0, 0, 2, 2, 2, 2});
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::DropoutMaskApply(p[0], keep), 5); }, p),
            1e-4);
}

TEST_F(PrimitiveGradTest, Convolutions) {
  std::vector<Tensor> p = {R({6, 3}), R({5, 3}), R({3})};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::DepthwiseConv1d(p[0], p[1], p[2]), 1); }, p),
            1e-4);
  std::vector<Tensor> q = {R({6, 3}), R({3, 4}), R({4})};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::PointwiseConv1d(q[0], q[1], q[2]), 2); }, q),
            1e-4);
  std::vector<Tensor> c = {R({2, 7, 8}), R({3, 2, 3, 3}), R({3})};
  EXPECT_LT(FiniteDifferenceCheck(
                [&] { return WeightedSum(ops::Conv2d(c[0], c[1], c[2], 2), 3); }, c),
            1e-4);
}

TEST(TensorPropertyTest, SoftmaxSumsToOneAndMatchesExpLogSoftmax) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = RandomTensor({3, 7}, rng, 4.0);
    Tensor s = ops::Softmax(x);
    Tensor ls = ops::LogSoftmax(x);
    for (int r = 0; r < 3; ++r) {
      double sum = 0.0;
      for (int c = 0; c < 7; ++c) {
        sum += s.at({r, c});
        EXPECT_NEAR(std::exp(ls.at({r, c})), s.at({r, c}), 1e-6);
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(TensorPropertyTest, MatMulAssociative) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = dim(rng), k = dim(rng), l = dim(rng), n = dim(rng);
    Tensor a = RandomTensor({m, k}, rng), b = RandomTensor({k, l}, rng),
           c = RandomTensor({l, n}, rng);
    Tensor left = ops::MatMul(ops::MatMul(a, b), c);
    Tensor right = ops::MatMul(a, ops::MatMul(b, c));
    for (int64_t i = 0; i < left.numel(); ++i) {
      EXPECT_NEAR(left.data()[i], right.data()[i], 1e-5);
    }
  }
}

TEST(TensorPropertyTest, GradientShapesMatchValues) {
  std::mt19937_64 rng(3);
  Tensor a = RandomTensor({3, 4}, rng, 1.0, true);
  Tensor b = RandomTensor({4, 2}, rng, 1.0, true);
  Tape tape;
  TapeScope scope(tape);
  tape.Backward(ops::Mean(ops::MatMul(a, b)));
  EXPECT_EQ(static_cast<int64_t>(a.grad().size()), a.numel());
  EXPECT_EQ(static_cast<int64_t>(b.grad().size()), b.numel());
}

}  // namespace
}  // namespace dualasr
