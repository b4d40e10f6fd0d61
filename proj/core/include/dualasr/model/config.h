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
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dualasr/losses/losses.h"

namespace dualasr {

// The six architectures of the joint verbatim/subtitle family.
enum class Variant {
  kNaiveE2E,
  kSharedTaskDecoder,
  kParallelDecoders,
  kCascadedEncoder,
  kCascadedDecoder,
  kCascadedEncoderDual,
};

std::string_view VariantName(Variant v);
// Accepts the names returned by VariantName; throws ConfigError otherwise.
Variant ParseVariant(std::string_view name);

bool HasSubtitleEncoder(Variant v);
bool HasSecondDecoder(Variant v);
// Whether the variant can emit subtitles at all.
bool SupportsSubtitles(Variant v);

struct ModelConfig {
  Variant variant = Variant::kParallelDecoders;
  int64_t feat_dim = 83;
  int64_t d_model = 256;
  int64_t n_heads = 4;
  int64_t ff_dim = 2048;
  int64_t conv_kernel = 31;
  int enc_layers = 12;
  int dec_layers = 6;
  int sub_enc_layers = 2;
  int64_t vocab_size = 5000;
  int64_t subsample_channels = 0;  // 0 = d_model
  double dropout = 0.1;
  double rel_pos_base = 10000.0;
  bool naive_merge_subtitles = false;
  LossWeights loss;
  uint64_t seed = 0;

  // Paper dimensions (Sec. 4.2.2).
  static ModelConfig Paper(Variant v, int sub_enc_layers = 2);
  // Paper layout with d_model 512 and 8 heads.
  static ModelConfig Xl(Variant v, int sub_enc_layers = 2);
  // Small layout used by tests and the synthetic corpora.
  static ModelConfig Desk(Variant v, int64_t vocab_size = 200);

  int64_t channels() const { return subsample_channels > 0 ? subsample_channels : d_model; }
  // Throws ConfigError describing the first violated constraint.
  void Validate() const;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Closed-form parameter count for a configuration.
int64_t CountParameters(const ModelConfig& config);

}  // namespace dualasr
