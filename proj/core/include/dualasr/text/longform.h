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

#include <optional>
#include <string>
#include <vector>

namespace dualasr {

// One time-ordered source segment of a recording.
struct LongformSegment {
  std::string id;
  std::string speaker;
  double duration = 0.0;  // seconds
  std::optional<std::string> verbatim;
  std::optional<std::string> subtitle;
};

struct LongformUtterance {
  std::string id;                       // "<first id>+<n>" for merged groups
  std::vector<size_t> sources;          // indices into the input
  double duration = 0.0;
  std::optional<std::string> verbatim;  // present when every source has one
  std::optional<std::string> subtitle;
  bool oversize = false;                // a single source longer than max_dur
};

struct LongformOptions {
  double max_duration = 15.0;
  double target_mean = 9.0;  // reported only; packing is greedy up to max_duration
};

struct LongformResult {
  std::vector<LongformUtterance> utterances;
  double mean_duration = 0.0;
  std::vector<std::string> warnings;
};

// Greedily packs consecutive segments until adding the next would exceed
// max_duration, inserting " <spk> " in the merged texts wherever adjacent
// sources have different speakers. A segment longer than max_duration is
// passed through alone with a warning.
LongformResult ConcatLongform(const std::vector<LongformSegment>& segments,
                              const LongformOptions& options = {});

}  // namespace dualasr
