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
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualasr/model/config.h"
#include "dualasr/model/model.h"
#include "dualasr/tensor/tensor.h"

namespace dualasr {

// File layout:
//   "DASRCKPT" | u32 version | u64 header bytes | JSON header | arrays
// The header holds the model config, vocabulary hash, step, optional extra
// metadata and the array manifest [[name, shape], ...]. Arrays follow as
// little-endian f32 values in manifest order.
struct CheckpointHeader {
  ModelConfig config;
  uint64_t vocab_hash = 0;
  uint64_t step = 0;
  nlohmann::json extra = nlohmann::json::object();
};

struct Checkpoint {
  CheckpointHeader header;
  std::vector<std::pair<std::string, Tensor>> arrays;
};

inline constexpr uint32_t kCheckpointVersion = 1;

// Writes through a temporary file and renames it into place.
void WriteCheckpoint(const std::string& path, const Checkpoint& ckpt);
// Throws FormatError on a malformed or truncated file.
Checkpoint ReadCheckpoint(const std::string& path);

Checkpoint SnapshotModel(const Model& model, uint64_t vocab_hash, uint64_t step);
// Copies arrays into the model's parameters; names and shapes must match.
void RestoreModel(const Checkpoint& ckpt, Model& model);
// Builds a model from the checkpoint config and restores its parameters.
Model LoadModel(const std::string& path, CheckpointHeader* header = nullptr);

// Element-wise mean of checkpoints with identical manifests. The header of
// the last checkpoint is kept.
Checkpoint AverageCheckpoints(const std::vector<Checkpoint>& ckpts);

}  // namespace dualasr
