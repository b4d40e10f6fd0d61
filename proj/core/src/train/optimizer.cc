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

#include "dualasr/train/optimizer.h"

#include <cmath>

#include "dualasr/errors.h"

namespace dualasr {

void OptimizerConfig::Validate() const {
  if (!(peak_lr > 0.0)) throw ConfigError("optim.peak_lr must be positive");
  if (warmup_steps < 0) throw ConfigError("optim.warmup_steps must be >= 0");
  if (half_life_steps < 0.0) throw ConfigError("optim.half_life must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("optim.beta1 and optim.beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("optim.eps must be positive");
  if (weight_decay < 0.0) throw ConfigError("optim.weight_decay must be >= 0");
  if (clip_norm < 0.0) throw ConfigError("optim.clip_norm must be >= 0");
}

double LearningRate(const OptimizerConfig& cfg, int64_t step) {
  if (step < 1) throw ContractError("learning rate: steps are 1-based");
  if (step <= cfg.warmup_steps) {
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (cfg.half_life_steps <= 0.0) return cfg.peak_lr;
  const double after = static_cast<double>(step - cfg.warmup_steps);
  return cfg.peak_lr * std::exp2(-after / cfg.half_life_steps);
}

AdamW::AdamW(std::vector<Tensor> params, const OptimizerConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  cfg_.Validate();
  for (const Tensor& p : params_) {
    if (!p.is_leaf()) throw ContractError("optimizer: parameters must be leaves");
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::ZeroGrad() {
  for (Tensor& p : params_) p.ZeroGrad();
}

double AdamW::Step(double lr) {
  double sq = 0.0;
  for (const Tensor& p : params_) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    ZeroGrad();
    throw NumericError("optimizer: non-finite gradient norm");
  }
  const double scale = cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::span<const double> g = p.grad();
    std::span<double> w = p.mutable_data();
    const bool f32 = p.dtype() == DType::kF32;
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (size_t k = 0; k < w.size(); ++k) {
      const double gk = g.empty() ? 0.0 : g[k] * scale;
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
      const double update = (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg_.eps);
      double nw = w[k] - lr * (update + cfg_.weight_decay * w[k]);
      if (f32) nw = static_cast<double>(static_cast<float>(nw));
      w[k] = nw;
    }
  }
  ZeroGrad();
  return norm;
}

}  // namespace dualasr
