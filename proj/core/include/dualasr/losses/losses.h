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
#include <span>

#include "dualasr/tensor/tensor.h"

namespace dualasr {

// Weights of Eqs. 1-3 plus label smoothing.
struct LossWeights {
  double alpha = 0.3;        // CTC weight in the ASR loss
  double beta = 0.3;         // share of intermediate CTC inside the CTC term
  double gamma = 0.3;        // share of subtitle CTC inside the subtitle term
  bool subtitle_ctc = false; // enables the gamma branch (cascaded encoders only)
  double lambda_asr = 0.5;
  double lambda_subs = 0.5;
  double smoothing = 0.1;
  int interctc_layer = 6;    // 1-based encoder layer; 0 disables intermediate CTC

  // Throws ConfigError on out-of-range values.
  void Validate() const;
};

// Mean over counted positions of KL(q || softmax(logits)), where q puts
// 1 - s on the target and s / (V - 1) on every other class:
//   loss_i = sum_v q_v (log q_v - log p_v).
// The entropy term sum_v q_v log q_v is included, so a perfect fit of q
// scores 0. ignore (optional, same length as targets) marks positions with
// nonzero entries that are excluded from the sum and the denominator.
Tensor LabelSmoothedCe(const Tensor& logits, std::span<const int64_t> targets,
                       double smoothing, std::span<const uint8_t> ignore = {});

// Eq. 1: (1-alpha) att + alpha [(1-beta) ctc + beta inter].
// When inter is undefined the CTC term is ctc alone.
Tensor AsrLoss(const Tensor& att, const Tensor& ctc, const Tensor& inter,
               const LossWeights& w);

// Batch-level loss terms, each already averaged over the utterances that
// carry the corresponding target. Undefined tensors mark absent terms.
struct LossTerms {
  Tensor att_asr, ctc, interctc;
  Tensor att_subs, ctc_subs;
};

struct LossComponents {
  double total = 0.0;
  double asr = 0.0, att_asr = 0.0, ctc = 0.0, interctc = 0.0;
  double subs = 0.0, att_subs = 0.0, ctc_subs = 0.0;
  bool has_asr = false, has_subs = false;
};

// Eq. 2 (no subtitle CTC term) or Eq. 3 (subtitle CTC present):
//   lambda_asr L_asr + lambda_subs [(1-gamma) att_subs + gamma ctc_subs].
// A task absent from the batch contributes nothing. Throws ContractError
// when both tasks are absent.
Tensor JointLoss(const LossTerms& terms, const LossWeights& w, LossComponents* parts);

}  // namespace dualasr
