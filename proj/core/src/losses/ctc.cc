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

#include "dualasr/losses/ctc.h"

#include <string>
#include <vector>

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"

namespace dualasr {

int64_t CtcMinFrames(std::span<const int64_t> labels) {
  int64_t n = static_cast<int64_t>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

Tensor CtcLoss(const Tensor& log_probs, std::span<const int64_t> labels, int64_t blank) {
  if (log_probs.rank() != 2 || log_probs.dim(0) == 0) {
    throw ShapeError("ctc_loss: log_probs must be non-empty [T,V], got " +
                     ShapeToString(log_probs.shape()));
  }
  const int64_t t_len = log_probs.dim(0), v = log_probs.dim(1);
  for (int64_t l : labels) {
    if (l < 0 || l >= v || l == blank) {
      throw ContractError("ctc_loss: label " + std::to_string(l) + " invalid for V=" +
                          std::to_string(v) + " with blank " + std::to_string(blank));
    }
  }
  const int64_t need = CtcMinFrames(labels);
  if (t_len < need) {
    throw InfeasibleError("ctc_loss: " + std::to_string(labels.size()) + " labels need " +
                          std::to_string(need) + " frames, only " + std::to_string(t_len) +
                          " available");
  }
  const int64_t s_len = 2 * static_cast<int64_t>(labels.size()) + 1;
  std::vector<int64_t> ext(s_len, blank);
  for (size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];

  // Transition sources: row 0 stay, row 1 from s-1, row 2 skip from s-2.
  std::vector<int64_t> trans(3 * s_len, -1);
  for (int64_t s = 0; s < s_len; ++s) {
    trans[s] = s;
    if (s >= 1) trans[s_len + s] = s - 1;
    if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) trans[2 * s_len + s] = s - 2;
  }
  auto emission = [&](int64_t t) {
    std::vector<int64_t> idx(s_len);
    for (int64_t s = 0; s < s_len; ++s) idx[s] = t * v + ext[s];
    return ops::Gather(log_probs, {s_len}, idx);
  };

  std::vector<int64_t> init(s_len, -1);
  init[0] = 0;
  if (s_len > 1) init[1] = 1;
  Tensor alpha = ops::Gather(emission(0), {s_len}, init, ops::kLogZero);
  for (int64_t t = 1; t < t_len; ++t) {
    Tensor prev = ops::Gather(alpha, {3, s_len}, trans, ops::kLogZero);
    alpha = ops::Add(ops::LogSumExpRows(prev), emission(t));
  }
  std::vector<int64_t> fin = {s_len - 1, s_len > 1 ? s_len - 2 : -1};
  Tensor total = ops::LogSumExpRows(ops::Gather(alpha, {2, 1}, fin, ops::kLogZero));
  return ops::Scale(ops::Reshape(total, {}), -1.0);
}

}  // namespace dualasr
