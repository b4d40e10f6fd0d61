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

#include "dualasr/text/longform.h"

#include "dualasr/errors.h"
#include "dualasr/text/normalize.h"

namespace dualasr {

namespace {

std::optional<std::string> MergeTexts(const std::vector<LongformSegment>& segs,
                                      const std::vector<size_t>& group,
                                      std::optional<std::string> LongformSegment::*field) {
  std::vector<std::string> words;
  for (size_t k = 0; k < group.size(); ++k) {
    const LongformSegment& s = segs[group[k]];
    if (!(s.*field)) return std::nullopt;
    if (k > 0 && s.speaker != segs[group[k - 1]].speaker) words.emplace_back("<spk>");
    for (auto& w : SplitWhitespace(*(s.*field))) words.push_back(std::move(w));
  }
  return JoinWords(words);
}

}  // namespace

LongformResult ConcatLongform(const std::vector<LongformSegment>& segs,
                              const LongformOptions& opt) {
  if (!(opt.max_duration > 0.0)) throw ConfigError("longform max_duration must be positive");
  LongformResult res;
  std::vector<std::vector<size_t>> groups;
  std::vector<size_t> cur;
  double cur_dur = 0.0;
  for (size_t i = 0; i < segs.size(); ++i) {
    const double d = segs[i].duration;
    if (!(d > 0.0)) {
      throw ContractError("longform: segment '" + segs[i].id + "' has non-positive duration");
    }
    if (!cur.empty() && cur_dur + d > opt.max_duration) {
      groups.push_back(std::move(cur));
      cur.clear();
      cur_dur = 0.0;
    }
    if (d > opt.max_duration) {
      res.warnings.push_back("segment '" + segs[i].id + "' exceeds the maximum duration");
      groups.push_back({i});
      continue;
    }
    cur.push_back(i);
    cur_dur += d;
  }
  if (!cur.empty()) groups.push_back(std::move(cur));

  double total = 0.0;
  for (const auto& g : groups) {
    LongformUtterance u;
    u.sources = g;
    u.id = g.size() == 1 ? segs[g[0]].id : segs[g[0]].id + "+" + std::to_string(g.size());
    for (size_t i : g) u.duration += segs[i].duration;
    u.oversize = g.size() == 1 && u.duration > opt.max_duration;
    u.verbatim = MergeTexts(segs, g, &LongformSegment::verbatim);
    u.subtitle = MergeTexts(segs, g, &LongformSegment::subtitle);
    total += u.duration;
    res.utterances.push_back(std::move(u));
  }
  if (!groups.empty()) res.mean_duration = total / static_cast<double>(groups.size());
  return res;
}

}  // namespace dualasr
