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

#include "dualasr/losses/losses.h"

#include <cmath>
#include <string>
#include <vector>

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"

namespace dualasr {

namespace {

void CheckUnit(const char* name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string("loss.") + name + " must be in [0,1], got " +
                      std::to_string(v));
  }
}

double ValueOr(const Tensor& t, double fallback) { return t.defined() ? t.item() : fallback; }

}  // namespace

void LossWeights::Validate() const {
  CheckUnit("alpha", alpha);
  CheckUnit("beta", beta);
  CheckUnit("gamma", gamma);
  if (!(lambda_asr >= 0.0) || !(lambda_subs >= 0.0)) {
    throw ConfigError("loss.lambda_asr and loss.lambda_subs must be >= 0");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ConfigError("loss.smoothing must be in [0,1), got " + std::to_string(smoothing));
  }
  if (interctc_layer < 0) throw ConfigError("loss.interctc_layer must be >= 0");
}

Tensor LabelSmoothedCe(const Tensor& logits, std::span<const int64_t> targets,
                       double smoothing, std::span<const uint8_t> ignore) {
  if (logits.rank() != 2 || logits.dim(0) != static_cast<int64_t>(targets.size())) {
    throw ShapeError("label_smoothed_ce: logits " + ShapeToString(logits.shape()) + " for " +
                     std::to_string(targets.size()) + " targets");
  }
  if (!ignore.empty() && ignore.size() != targets.size()) {
    throw ShapeError("label_smoothed_ce: ignore mask length mismatch");
  }
  const int64_t len = logits.dim(0), v = logits.dim(1);
  if (v < 2) throw ShapeError("label_smoothed_ce: need at least 2 classes");
  const double on = 1.0 - smoothing;
  const double off = smoothing / static_cast<double>(v - 1);
  auto xlogx = [](double q) { return q > 0.0 ? q * std::log(q) : 0.0; };
  const double neg_entropy = xlogx(on) + static_cast<double>(v - 1) * xlogx(off);
  std::vector<double> q(len * v, 0.0);
  int64_t counted = 0;
  for (int64_t i = 0; i < len; ++i) {
    if (!ignore.empty() && ignore[i]) continue;
    if (targets[i] < 0 || targets[i] >= v) {
      throw ContractError("label_smoothed_ce: target " + std::to_string(targets[i]) +
                          " outside vocabulary of " + std::to_string(v));
    }
    ++counted;
    for (int64_t c = 0; c < v; ++c) q[i * v + c] = c == targets[i] ? on : off;
  }
  if (counted == 0) throw ContractError("label_smoothed_ce: every position is ignored");
  Tensor cross = ops::Sum(ops::Mul(ops::LogSoftmax(logits), Tensor(logits.shape(), std::move(q),
                                                                   logits.dtype())));
  const double n = static_cast<double>(counted);
  return ops::AddScalar(ops::Scale(cross, -1.0 / n), neg_entropy);
}

Tensor AsrLoss(const Tensor& att, const Tensor& ctc, const Tensor& inter, const LossWeights& w) {
  Tensor ctc_term = inter.defined()
                        ? ops::Add(ops::Scale(ctc, 1.0 - w.beta), ops::Scale(inter, w.beta))
                        : ctc;
  return ops::Add(ops::Scale(att, 1.0 - w.alpha), ops::Scale(ctc_term, w.alpha));
}

Tensor JointLoss(const LossTerms& t, const LossWeights& w, LossComponents* parts) {
  const bool has_asr = t.att_asr.defined();
  const bool has_subs = t.att_subs.defined();
  if (!has_asr && !has_subs) {
    throw ContractError("joint_loss: batch has neither verbatim nor subtitle utterances");
  }
  Tensor total;
  LossComponents c;
  if (has_asr) {
    if (!t.ctc.defined()) throw ContractError("joint_loss: verbatim CTC term missing");
    Tensor asr = AsrLoss(t.att_asr, t.ctc, t.interctc, w);
    total = ops::Scale(asr, w.lambda_asr);
    c.has_asr = true;
    c.asr = asr.item();
    c.att_asr = t.att_asr.item();
    c.ctc = t.ctc.item();
    c.interctc = ValueOr(t.interctc, 0.0);
  }
  if (has_subs) {
    Tensor subs = t.ctc_subs.defined() ? ops::Add(ops::Scale(t.att_subs, 1.0 - w.gamma),
                                                  ops::Scale(t.ctc_subs, w.gamma))
                                       : t.att_subs;
    Tensor weighted = ops::Scale(subs, w.lambda_subs);
    total = total.defined() ? ops::Add(total, weighted) : weighted;
    c.has_subs = true;
    c.subs = subs.item();
    c.att_subs = t.att_subs.item();
    c.ctc_subs = ValueOr(t.ctc_subs, 0.0);
  }
  c.total = total.item();
  if (parts) *parts = c;
  return total;
}

}  // namespace dualasr
