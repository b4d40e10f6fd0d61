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
#include "dualasr/losses/ctc.h"
#include "dualasr/losses/losses.h"
#include "dualasr/tensor/gradcheck.h"
#include "dualasr/tensor/ops.h"
#include "oracles/oracles.h"

namespace dualasr {
namespace {

using oracle::RandomTensor;

Tensor UniformLogProbs(int64_t t, int64_t v) {
  return Tensor::Full({t, v}, -std::log(static_cast<double>(v)));
}

std::vector<std::vector<double>> Rows(const Tensor& t) {
  std::vector<std::vector<double>> r(t.dim(0));
  for (int64_t i = 0; i < t.dim(0); ++i) {
    r[i].assign(t.data().begin() + i * t.dim(1), t.data().begin() + (i + 1) * t.dim(1));
  }
  return r;
}

TEST(CtcTest, SingleFrameSinglePath) {
  const std::vector<int64_t> labels = {1};
  EXPECT_NEAR(CtcLoss(UniformLogProbs(1, 3), labels).item(), std::log(3.0), 1e-12);
}

TEST(CtcTest, TwoFramesThreeAlignments) {
  const std::vector<int64_t> labels = {1};
  EXPECT_NEAR(CtcLoss(UniformLogProbs(2, 3), labels).item(), -std::log(3.0 / 9.0), 1e-12);
}

TEST(CtcTest, EmptyLabelIsAllBlank) {
  std::mt19937_64 rng(1);
  Tensor lp = ops::LogSoftmax(RandomTensor({4, 3}, rng));
  double expect = 0.0;
  for (int t = 0; t < 4; ++t) expect -= lp.at({t, 0});
  EXPECT_NEAR(CtcLoss(lp, std::vector<int64_t>{}).item(), expect, 1e-12);
}

TEST(CtcTest, InfeasibleLabelThrows) {
  const std::vector<int64_t> repeat = {1, 1};
  EXPECT_THROW(CtcLoss(UniformLogProbs(2, 3), repeat), InfeasibleError);
  EXPECT_NO_THROW(CtcLoss(UniformLogProbs(3, 3), repeat));
  const std::vector<int64_t> three = {1, 2, 1};
  EXPECT_THROW(CtcLoss(UniformLogProbs(2, 3), three), InfeasibleError);
  EXPECT_EQ(CtcMinFrames(repeat), 3);
}

TEST(CtcTest, BlankLabelIsContractError) {
  const std::vector<int64_t> labels = {0};
  EXPECT_THROW(CtcLoss(UniformLogProbs(2, 3), labels), ContractError);
}

TEST(CtcTest, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> tdist(1, 6), ldist(0, 3), vdist(2, 4);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int t = tdist(rng), v = vdist(rng), l = ldist(rng);
    std::uniform_int_distribution<int> tok(1, v - 1);
    std::vector<int64_t> labels(l);
    for (auto& x : labels) x = tok(rng);
    Tensor lp = ops::LogSoftmax(RandomTensor({t, v}, rng, 2.0));
    if (CtcMinFrames(labels) > t) {
      EXPECT_THROW(CtcLoss(lp, labels), InfeasibleError);
      continue;
    }
    std::vector<int> lab(labels.begin(), labels.end());
    const double brute = oracle::BruteForceCtcLogLik(Rows(lp), lab);
    EXPECT_NEAR(-CtcLoss(lp, labels).item(), brute, 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(CtcTest, GradientCheck) {
  std::mt19937_64 rng(3);
  std::vector<Tensor> p = {RandomTensor({5, 4}, rng)};
  const std::vector<int64_t> labels = {2, 3};
  EXPECT_LT(FiniteDifferenceCheck([&] { return CtcLoss(ops::LogSoftmax(p[0]), labels); }, p),
            1e-4);
  const std::vector<int64_t> repeat = {1, 1, 2};
  EXPECT_LT(FiniteDifferenceCheck([&] { return CtcLoss(ops::LogSoftmax(p[0]), repeat); }, p),
            1e-4);
}

TEST(LabelSmoothingTest, PerfectOneHotNoSmoothing) {
  Tensor logits({1, 3}, {50, 0, 0});
  EXPECT_NEAR(LabelSmoothedCe(logits, std::vector<int64_t>{0}, 0.0).item(), 0.0, 1e-12);
}

TEST(LabelSmoothingTest, UniformNoSmoothing) {
  Tensor logits = Tensor::Zeros({2, 5});
  EXPECT_NEAR(LabelSmoothedCe(logits, std::vector<int64_t>{1, 3}, 0.0).item(), std::log(5.0),
              1e-12);
}

TEST(LabelSmoothingTest, UniformWithSmoothingMatchesFormula) {
  Tensor logits = Tensor::Zeros({1, 5});
  // sum_v q_v (log q_v - log(1/5)) with q = (0.9, 0.025 x4).
  double expect = 0.0;
  for (double q : {0.9, 0.025, 0.025, 0.025, 0.025}) expect += q * (std::log(q) + std::log(5.0));
  EXPECT_NEAR(LabelSmoothedCe(logits, std::vector<int64_t>{2}, 0.1).item(), expect, 1e-12);
  EXPECT_NEAR(expect, 1.1457, 1e-4);
}

TEST(LabelSmoothingTest, IgnoredPositionsLeaveDenominator) {
  std::mt19937_64 rng(4);
  Tensor logits = RandomTensor({3, 4}, rng);
  const std::vector<int64_t> targets = {1, 2, 3};
  const std::vector<uint8_t> ignore = {0, 1, 0};
  const double masked = LabelSmoothedCe(logits, targets, 0.1, ignore).item();
  const double a = LabelSmoothedCe(ops::Slice(logits, 0, 0, 1), std::vector<int64_t>{1}, 0.1).item();
  const double b = LabelSmoothedCe(ops::Slice(logits, 0, 2, 1), std::vector<int64_t>{3}, 0.1).item();
  EXPECT_NEAR(masked, 0.5 * (a + b), 1e-12);
  const std::vector<uint8_t> all = {1, 1, 1};
  EXPECT_THROW(LabelSmoothedCe(logits, targets, 0.1, all), ContractError);
}

TEST(LabelSmoothingTest, GradientCheck) {
  std::mt19937_64 rng(5);
  std::vector<Tensor> p = {RandomTensor({4, 6}, rng)};
  const std::vector<int64_t> targets = {1, 5, 0, 2};
  const std::vector<uint8_t> ignore = {0, 0, 1, 0};
  EXPECT_LT(FiniteDifferenceCheck([&] { return LabelSmoothedCe(p[0], targets, 0.1, ignore); }, p),
            1e-4);
}

Tensor S(double v) { return Tensor::Scalar(v); }

TEST(ObjectiveTest, AsrLossEquation) {
  LossWeights w;
  w.alpha = 0.0;
  EXPECT_EQ(AsrLoss(S(2.0), S(1.0), S(3.0), w).item(), 2.0);
  w.alpha = 1.0;
  w.beta = 0.0;
  EXPECT_EQ(AsrLoss(S(2.0), S(1.0), S(3.0), w).item(), 1.0);
  w.alpha = 0.3;
  w.beta = 0.3;
  EXPECT_NEAR(AsrLoss(S(2.0), S(1.0), S(3.0), w).item(), 0.7 * 2.0 + 0.3 * (0.7 * 1.0 + 0.3 * 3.0),
              1e-12);
  EXPECT_NEAR(AsrLoss(S(2.0), S(1.0), S(3.0), w).item(), 1.88, 1e-12);
}

TEST(ObjectiveTest, JointLossEquations) {
  LossWeights w;
  LossTerms t{S(2.0), S(1.0), S(3.0), S(2.0), Tensor()};
  LossComponents c;
  EXPECT_NEAR(JointLoss(t, w, &c).item(), 0.5 * 1.88 + 0.5 * 2.0, 1e-12);
  EXPECT_NEAR(c.total, 1.94, 1e-12);
  t.ctc_subs = S(1.0);
  JointLoss(t, w, &c);
  EXPECT_NEAR(c.subs, 0.7 * 2.0 + 0.3 * 1.0, 1e-12);
  EXPECT_NEAR(c.subs, 1.7, 1e-12);
  w.lambda_subs = 0.0;
  EXPECT_NEAR(JointLoss(t, w, &c).item(), 0.5 * 1.88, 1e-12);
}

TEST(ObjectiveTest, ZeroWeightsReduceToAttention) {
  LossWeights w;
  w.alpha = w.beta = w.gamma = 0.0;
  LossTerms t{S(2.5), S(1.0), S(3.0), S(4.0), S(7.0)};
  EXPECT_EQ(JointLoss(t, w, nullptr).item(), 0.5 * 2.5 + 0.5 * 4.0);
}

TEST(ObjectiveTest, EmptyBatchIsContractError) {
  EXPECT_THROW(JointLoss(LossTerms{}, LossWeights{}, nullptr), ContractError);
}

TEST(ObjectiveTest, ValidateRanges) {
  LossWeights w;
  EXPECT_NO_THROW(w.Validate());
  w.alpha = 1.5;
  EXPECT_THROW(w.Validate(), ConfigError);
  w = LossWeights{};
  w.smoothing = 1.0;
  EXPECT_THROW(w.Validate(), ConfigError);
}

}  // namespace
}  // namespace dualasr
