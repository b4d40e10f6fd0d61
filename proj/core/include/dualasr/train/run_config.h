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
#include <vector>

#include "dualasr/decoding/beam_search.h"
#include "dualasr/features/features.h"
#include "dualasr/model/config.h"
#include "dualasr/train/optimizer.h"

namespace dualasr {

struct TrainLoopConfig {
  int batch_size = 8;
  int64_t max_steps = 2000;
  int max_epochs = 0;          // 0 = bounded by max_steps only
  int64_t valid_every = 100;   // steps between validation passes and checkpoints
  int average_top_k = 10;      // checkpoints averaged at the end
  int log_every = 1;
  bool spec_augment = false;
};

struct DataConfig {
  std::string train_manifest;
  std::string valid_manifest;  // empty: validate on the training pools
  std::string subwords;        // subword model file
  std::string out_dir;
};

// Plain-text run configuration. Grammar, one assignment per line:
//   section.key = value      # comments start with '#'
// Unknown keys and malformed values are rejected with the line number.
// model.preset (desk, paper, xl) is applied before any other model key
// regardless of its position.
struct RunConfig {
  uint64_t seed = 0;
  ModelConfig model = ModelConfig::Desk(Variant::kParallelDecoders);
  FeatureConfig features;
  SpecAugmentPolicy spec_augment;
  OptimizerConfig optim;
  TrainLoopConfig train;
  DecodeConfig decode;
  DataConfig data;

  static RunConfig Parse(std::string_view text, const std::string& source = "<config>");
  static RunConfig Load(const std::string& path);
  // Applies one "section.key" assignment. Throws ConfigError.
  void Set(const std::string& key, const std::string& value);
  // Every key with its resolved value, in a fixed order; Parse(ToString())
  // reproduces the configuration.
  std::string ToString() const;
  void Save(const std::string& path) const;
  void Validate() const;

  static std::vector<std::string> Keys();
};

}  // namespace dualasr
