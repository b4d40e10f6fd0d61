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

#include "dualasr/data/filter.h"

#include "dualasr/errors.h"

namespace dualasr {

nlohmann::json FilterReport::ToJson() const {
  return {{"threshold", threshold},         {"total_count", total_count},
          {"retained_count", retained_count}, {"total_hours", total_hours},
          {"retained_hours", retained_hours}, {"dropped_ids", dropped_ids}};
}

FilterResult FilterByBleu(const std::vector<UtteranceRecord>& pool,
                          const std::map<std::string, std::string>& hypotheses,
                          double threshold_percent, const EquivalenceTable* eq) {
  std::vector<std::string> missing, no_subtitle;
  for (const auto& r : pool) {
    if (!hypotheses.count(r.id)) missing.push_back(r.id);
    if (!r.subtitle) no_subtitle.push_back(r.id);
  }
  if (!missing.empty() || !no_subtitle.empty()) {
    std::string msg = "filter:";
    if (!missing.empty()) {
      msg += " no hypothesis for";
      for (const auto& id : missing) msg += " " + id;
      msg += ";";
    }
    if (!no_subtitle.empty()) {
      msg += " no subtitle text for";
      for (const auto& id : no_subtitle) msg += " " + id;
      msg += ";";
    }
    throw ContractError(msg);
  }
  FilterResult out;
  out.report.threshold = threshold_percent;
  out.report.total_count = pool.size();
  double total_s = 0.0, kept_s = 0.0;
  for (const auto& r : pool) {
    total_s += r.duration;
    const double bleu = SentenceBleu(hypotheses.at(r.id), *r.subtitle, eq).score;
    if (bleu >= threshold_percent) {
      out.retained.push_back(r);
      kept_s += r.duration;
    } else {
      out.report.dropped_ids.push_back(r.id);
    }
  }
  out.report.retained_count = out.retained.size();
  out.report.total_hours = total_s / 3600.0;
  out.report.retained_hours = kept_s / 3600.0;
  return out;
}

}  // namespace dualasr
