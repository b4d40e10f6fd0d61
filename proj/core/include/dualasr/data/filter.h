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

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualasr/data/manifest.h"
#include "dualasr/metrics/metrics.h"

namespace dualasr {

struct FilterReport {
  double threshold = 0.0;  // percent BLEU
  size_t total_count = 0;
  size_t retained_count = 0;
  double total_hours = 0.0;
  double retained_hours = 0.0;
  std::vector<std::string> dropped_ids;
  nlohmann::json ToJson() const;
};

struct FilterResult {
  std::vector<UtteranceRecord> retained;
  FilterReport report;
};

// Keeps records whose smoothed sentence BLEU(hypothesis, subtitle) is at
// least threshold_percent. Throws ContractError listing every record that
// has no hypothesis or no subtitle text.
FilterResult FilterByBleu(const std::vector<UtteranceRecord>& pool,
                          const std::map<std::string, std::string>& hypotheses,
                          double threshold_percent, const EquivalenceTable* eq = nullptr);

}  // namespace dualasr
