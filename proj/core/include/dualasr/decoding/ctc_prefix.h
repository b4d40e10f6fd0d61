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
#include <vector>

#include "dualasr/tensor/tensor.h"

namespace dualasr {

// Forward variables of the CTC prefix DP for one label prefix h:
//   r_nb[t] = log P(x_1..t collapses to h, frame t emits the last label)
//   r_b[t]  = log P(x_1..t collapses to h, frame t emits blank)
//   prefix  = log sum over all label sequences that start with h
struct CtcPrefixState {
  std::vector<double> r_nb;
  std::vector<double> r_b;
  double prefix = 0.0;
  int64_t last = -1;  // last label of h, -1 when h is empty
};

// Incremental CTC prefix scoring over log-probabilities [T,V].
class CtcPrefixScorer {
 public:
  explicit CtcPrefixScorer(const Tensor& log_probs, int64_t blank = 0);

  int64_t frames() const { return frames_; }
  int64_t vocab_size() const { return vocab_; }

  CtcPrefixState Initial() const;
  // State for h·token. Throws ContractError for the blank or an id outside V.
  CtcPrefixState Extend(const CtcPrefixState& state, int64_t token) const;
  // log P(h is the complete labeling).
  double Final(const CtcPrefixState& state) const;

  // Prefix and final scores of a whole label sequence.
  CtcPrefixState Score(std::span<const int64_t> labels) const;

 private:
  double lp(int64_t t, int64_t v) const { return log_probs_[t * vocab_ + v]; }

  std::vector<double> log_probs_;
  int64_t frames_ = 0;
  int64_t vocab_ = 0;
  int64_t blank_ = 0;
};

// Values at or below this are treated as log(0).
inline constexpr double kCtcImpossible = -1e29;

}  // namespace dualasr
