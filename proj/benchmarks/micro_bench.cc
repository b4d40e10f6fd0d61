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

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dualasr/decoding/beam_search.h"
#include "dualasr/features/features.h"
#include "dualasr/losses/ctc.h"
#include "dualasr/model/model.h"
#include "dualasr/tensor/ops.h"
#include "dualasr/train/optimizer.h"

namespace dualasr {
namespace {

std::vector<float> Tone(double seconds) {
  std::vector<float> w(static_cast<size_t>(seconds * 16000));
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = 0.3f * static_cast<float>(std::sin(2 * std::numbers::pi * 440.0 * i / 16000.0));
  }
  return w;
}

Tensor RandomTensor(Shape shape, uint64_t seed, DType dtype = DType::kF32) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v), dtype);
}

void BM_Fbank(benchmark::State& state) {
  const std::vector<float> w = Tone(static_cast<double>(state.range(0)));
  const FeatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(UtteranceCmvn(ComputeFbank(w, cfg)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fbank)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_CtcForwardBackward(benchmark::State& state) {
  const int64_t T = state.range(0), V = 64, L = T / 5;
  std::vector<int64_t> labels(L);
  for (int64_t i = 0; i < L; ++i) labels[i] = 7 + i % (V - 7);
  const Tensor logits = RandomTensor({T, V}, 1, DType::kF64);
  for (auto _ : state) {
    Tensor x = logits.Clone(true);
    Tape tape;
    TapeScope scope(tape);
    const Tensor loss = CtcLoss(ops::LogSoftmax(x), labels);
    tape.Backward(loss);
    benchmark::DoNotOptimize(x.grad().data());
  }
}
BENCHMARK(BM_CtcForwardBackward)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

std::vector<Utterance> Batch(const ModelConfig& mc, int n) {
  std::vector<Utterance> batch;
  for (int i = 0; i < n; ++i) {
    Utterance u;
    u.id = "u" + std::to_string(i);
    u.features = RandomTensor({100, mc.feat_dim}, 10 + i);
    std::vector<int64_t> y;
    for (int k = 0; k < 6; ++k) y.push_back(7 + (i * 5 + k) % (mc.vocab_size - 7));
    if (i % 2 == 0) u.verbatim = y;
    else u.subtitle = y;
    batch.push_back(std::move(u));
  }
  return batch;
}

void BM_TrainStep(benchmark::State& state) {
  const ModelConfig mc = ModelConfig::Desk(static_cast<Variant>(state.range(0)), 64);
  Model model(mc);
  const std::vector<Utterance> batch = Batch(mc, 8);
  AdamW opt(model.params().tensors(), OptimizerConfig{});
  uint64_t step = 0;
  for (auto _ : state) {
    Tape tape;
    TapeScope scope(tape);
    const TrainOutputs out = model.ForwardTrain(batch, {.step = ++step, .train = true});
    tape.Backward(out.loss);
    opt.Step(1e-4);
  }
  state.SetLabel(std::string(VariantName(mc.variant)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Variant::kParallelDecoders))
    ->Arg(static_cast<int>(Variant::kCascadedEncoder))
    ->Unit(benchmark::kMillisecond);

void BM_DualDecode(benchmark::State& state) {
  const ModelConfig mc = ModelConfig::Desk(Variant::kCascadedEncoder, 64);
  const Model model(mc);
  const Tensor feats = RandomTensor({100, mc.feat_dim}, 3);
  DecodeConfig dc;
  dc.beam = static_cast<int>(state.range(0));
  dc.max_len_ratio = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(DualDecode(model, feats, dc));
}
BENCHMARK(BM_DualDecode)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dualasr

BENCHMARK_MAIN();
