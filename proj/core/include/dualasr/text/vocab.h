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

#include <array>
#include <cstdint>
#include <string_view>

namespace dualasr::vocab {

// Reserved ids shared by every subword model and every network head.
inline constexpr int64_t kBlank = 0;
inline constexpr int64_t kUnk = 1;
inline constexpr int64_t kSos = 2;
inline constexpr int64_t kEos = 3;
inline constexpr int64_t kVerbatim = 4;
inline constexpr int64_t kSubtitle = 5;
inline constexpr int64_t kSpk = 6;
inline constexpr int64_t kNumReserved = 7;

inline constexpr std::array<std::string_view, kNumReserved> kReservedNames = {
    "<blank>", "<unk>", "<sos>", "<eos>", "<verbatim>", "<subtitle>", "<spk>"};

enum class Task { kVerbatim, kSubtitle };

inline int64_t TaskToken(Task t) { return t == Task::kVerbatim ? kVerbatim : kSubtitle; }
inline std::string_view TaskName(Task t) {
  return t == Task::kVerbatim ? "verbatim" : "subtitle";
}

// Tokens an attention decoder never proposes as a next token.
inline bool IsNonEmittable(int64_t id) {
  return id == kBlank || id == kSos || id == kVerbatim || id == kSubtitle || id == kUnk;
}

// Ids allowed inside a target sequence: subwords, <unk> and <spk>.
inline bool IsTargetToken(int64_t id) {
  return id >= kNumReserved || id == kUnk || id == kSpk;
}

}  // namespace dualasr::vocab
