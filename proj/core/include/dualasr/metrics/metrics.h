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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dualasr {

// Surface form -> canonical form. Chains are resolved on insertion so that
// Canonical() is idempotent.
class EquivalenceTable {
 public:
  EquivalenceTable() = default;
  // "surface<TAB>canonical" lines; '#' starts a comment line. Throws
  // FormatError with the line number on malformed lines or cycles.
  static EquivalenceTable Parse(std::string_view text);
  static EquivalenceTable Load(const std::string& path);

  void Add(const std::string& surface, const std::string& canonical);
  const std::string& Canonical(const std::string& word) const;
  std::vector<std::string> Canonicalize(const std::vector<std::string>& words) const;
  size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, std::string> map_;
};

// Tokens as scored: StripForScoring, whitespace split, canonicalization.
std::vector<std::string> ScoringTokens(std::string_view text,
                                       const EquivalenceTable* eq = nullptr);

struct WerResult {
  int64_t substitutions = 0;
  int64_t deletions = 0;
  int64_t insertions = 0;
  int64_t ref_words = 0;
  int64_t errors() const { return substitutions + deletions + insertions; }
  double wer() const;  // percent
  WerResult& operator+=(const WerResult& o);
};

// Unit-cost Levenshtein alignment. Among minimum-cost alignments the one
// with the most substitutions is reported. Throws ContractError when ref is
// empty.
WerResult WerTokens(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);
WerResult Wer(std::string_view hyp, std::string_view ref, const EquivalenceTable* eq = nullptr);

struct BleuStats {
  std::array<int64_t, 4> matches{};
  std::array<int64_t, 4> totals{};
  int64_t hyp_len = 0;
  int64_t ref_len = 0;
  BleuStats& operator+=(const BleuStats& o);
};

struct BleuResult {
  double score = 0.0;  // [0, 100]
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  bool empty_hypothesis = false;
};

BleuStats BleuCounts(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);
// Uniform-weight BLEU-4 from accumulated counts. Precisions for n > 1 use
// add-one smoothing (m + 1) / (t + 1); unigram precision is unsmoothed.
// Brevity penalty exp(1 - r / c) when c < r. Empty hypothesis -> 0 with flag.
BleuResult BleuFromStats(const BleuStats& s);
BleuResult SentenceBleu(std::string_view hyp, std::string_view ref,
                        const EquivalenceTable* eq = nullptr);
// Counts summed over segments before the score is formed.
BleuResult CorpusBleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                      const EquivalenceTable* eq = nullptr);

// Paired bootstrap over segments. Returns min(1, 2 * f) where f is the
// fraction of resampled corpora whose BLEU(A) - BLEU(B) does not have the
// sign of the full-corpus difference (ties count as flips). Throws
// ContractError with fewer than 2 segments or misaligned inputs.
double BootstrapBleuPValue(const std::vector<std::string>& hyps_a,
                           const std::vector<std::string>& hyps_b,
                           const std::vector<std::string>& refs, int n_resamples,
                           uint64_t seed, const EquivalenceTable* eq = nullptr);

// Matched-pairs sentence-segment word error test, normal approximation:
// d = a - b, Z = mean(d) / sqrt(var(d) / n) with the unbiased variance,
// p = erfc(|Z| / sqrt(2)). var = 0 gives p = 1 when mean = 0, else p = 0.
double MapsswePValue(const std::vector<double>& errors_a, const std::vector<double>& errors_b);

inline constexpr double kSignificanceLevel = 0.05;
// "insignificant" when p > 0.05, else "significant".
std::string SignificanceTag(double p);

}  // namespace dualasr
