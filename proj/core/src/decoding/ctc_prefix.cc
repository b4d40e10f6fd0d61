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

#include "dualasr/decoding/ctc_prefix.h"

#include <cmath>
#include <limits>

#include "dualasr/errors.h"
#include "dualasr/tensor/ops.h"

namespace dualasr {

namespace {

constexpr double kZero = ops::kLogZero;

double LogAdd(double a, double b) {
  if (a <= kCtcImpossible) return b;
  if (b <= kCtcImpossible) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double LogMul(double a, double b) {
  return a <= kCtcImpossible || b <= kCtcImpossible ? kZero : a + b;
}

}  // namespace

CtcPrefixScorer::CtcPrefixScorer(const Tensor& log_probs, int64_t blank) : blank_(blank) {
  if (log_probs.rank() != 2 || log_probs.dim(0) == 0) {
    throw ShapeError("ctc prefix scorer expects non-empty [T,V], got " +
                     ShapeToString(log_probs.shape()));
  }
  frames_ = log_probs.dim(0);
  vocab_ = log_probs.dim(1);
  if (blank < 0 || blank >= vocab_) throw ContractError("ctc prefix scorer: blank outside V");
  log_probs_.assign(log_probs.data().begin(), log_probs.data().end());
}

CtcPrefixState CtcPrefixScorer::Initial() const {
  CtcPrefixState s;
  s.r_nb.assign(frames_, kZero);
  s.r_b.resize(frames_);
  double acc = 0.0;
  for (int64_t t = 0; t < frames_; ++t) {
    acc = LogMul(acc, lp(t, blank_));
    s.r_b[t] = acc;
  }
  s.prefix = 0.0;
  return s;
}

CtcPrefixState CtcPrefixScorer::Extend(const CtcPrefixState& h, int64_t c) const {
  if (c == blank_) throw ContractError("ctc prefix score: the blank is never a candidate");
  if (c < 0 || c >= vocab_) {
    throw ContractError("ctc prefix score: token " + std::to_string(c) + " outside V");
  }
  if (static_cast<int64_t>(h.r_nb.size()) != frames_) {
    throw ContractError("ctc prefix score: state does not match this scorer");
  }
  CtcPrefixState s;
  s.last = c;
  s.r_nb.resize(frames_);
  s.r_b.resize(frames_);
  // phi[t]: mass of h at frame t from which c can start a new label.
  auto phi = [&](int64_t t) { return c == h.last ? h.r_b[t] : LogAdd(h.r_nb[t], h.r_b[t]); };
  s.r_nb[0] = h.last < 0 ? lp(0, c) : kZero;
  s.r_b[0] = kZero;
  double psi = s.r_nb[0];
  for (int64_t t = 1; t < frames_; ++t) {
    const double p = phi(t - 1);
    s.r_nb[t] = LogMul(LogAdd(s.r_nb[t - 1], p), lp(t, c));
    s.r_b[t] = LogMul(LogAdd(s.r_b[t - 1], s.r_nb[t - 1]), lp(t, blank_));
    psi = LogAdd(psi, LogMul(p, lp(t, c)));
  }
  s.prefix = psi <= kCtcImpossible ? kZero : psi;
  return s;
}

double CtcPrefixScorer::Final(const CtcPrefixState& s) const {
  const double v = LogAdd(s.r_nb[frames_ - 1], s.r_b[frames_ - 1]);
  return v <= kCtcImpossible ? kZero : v;
}

CtcPrefixState CtcPrefixScorer::Score(std::span<const int64_t> labels) const {
  CtcPrefixState s = Initial();
  for (int64_t c : labels) s = Extend(s, c);
  return s;
}

}  // namespace dualasr
