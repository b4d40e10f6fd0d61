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

#include "dualasr/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "dualasr/errors.h"
#include "dualasr/text/normalize.h"
#include "dualasr/util/hash.h"

namespace dualasr {

namespace {

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

EquivalenceTable EquivalenceTable::Parse(std::string_view text) {
  EquivalenceTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("equivalence table line " + std::to_string(lineno) +
                        ": expected surface<TAB>canonical");
    }
    const std::string surface = Trim(std::string_view(line).substr(0, tab));
    const std::string canonical = Trim(std::string_view(line).substr(tab + 1));
    if (surface.empty() || canonical.empty() ||
        surface.find_first_of(" \t") != std::string::npos ||
        canonical.find_first_of(" \t") != std::string::npos) {
      throw FormatError("equivalence table line " + std::to_string(lineno) +
                        ": entries must be single non-empty words");
    }
    try {
      table.Add(surface, canonical);
    } catch (const FormatError& e) {
      throw FormatError("equivalence table line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

EquivalenceTable EquivalenceTable::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("equivalence table: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

void EquivalenceTable::Add(const std::string& surface, const std::string& canonical) {
  const std::string target = Canonical(canonical);
  if (target == surface) {
    if (surface == canonical) return;
    throw FormatError("cycle through '" + surface + "'");
  }
  if (auto it = map_.find(surface); it != map_.end() && it->second != target) {
    throw FormatError("'" + surface + "' already maps to '" + it->second + "'");
  }
  map_[surface] = target;
  for (auto& [k, v] : map_) {
    if (v == surface) v = target;
  }
}

const std::string& EquivalenceTable::Canonical(const std::string& word) const {
  auto it = map_.find(word);
  return it == map_.end() ? word : it->second;
}

std::vector<std::string> EquivalenceTable::Canonicalize(
    const std::vector<std::string>& words) const {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(Canonical(w));
  return out;
}

std::vector<std::string> ScoringTokens(std::string_view text, const EquivalenceTable* eq) {
  std::vector<std::string> words = SplitWhitespace(StripForScoring(text));
  return eq ? eq->Canonicalize(words) : words;
}

double WerResult::wer() const {
  return ref_words == 0 ? 0.0 : 100.0 * static_cast<double>(errors()) / ref_words;
}

WerResult& WerResult::operator+=(const WerResult& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_words += o.ref_words;
  return *this;
}

WerResult WerTokens(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  if (ref.empty()) throw ContractError("wer: empty reference");
  const size_t R = ref.size(), H = hyp.size();
  // Cell = (cost, -substitutions), minimized lexicographically.
  struct Cell {
    int64_t cost = 0, neg_sub = 0, del = 0, ins = 0;
    bool operator<(const Cell& o) const {
      return cost != o.cost ? cost < o.cost : neg_sub < o.neg_sub;
    }
  };
  std::vector<Cell> prev(H + 1), cur(H + 1);
  for (size_t j = 0; j <= H; ++j) prev[j] = {static_cast<int64_t>(j), 0, 0, static_cast<int64_t>(j)};
  for (size_t i = 1; i <= R; ++i) {
    cur[0] = {static_cast<int64_t>(i), 0, static_cast<int64_t>(i), 0};
    for (size_t j = 1; j <= H; ++j) {
      Cell diag = prev[j - 1];
      if (ref[i - 1] != hyp[j - 1]) {
        diag.cost += 1;
        diag.neg_sub -= 1;
      }
      Cell del = prev[j];
      del.cost += 1;
      del.del += 1;
      Cell ins = cur[j - 1];
      ins.cost += 1;
      ins.ins += 1;
      Cell best = diag;
      if (del < best) best = del;
      if (ins < best) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell& c = prev[H];
  WerResult r;
  r.substitutions = -c.neg_sub;
  r.deletions = c.del;
  r.insertions = c.ins;
  r.ref_words = static_cast<int64_t>(R);
  return r;
}

WerResult Wer(std::string_view hyp, std::string_view ref, const EquivalenceTable* eq) {
  return WerTokens(ScoringTokens(hyp, eq), ScoringTokens(ref, eq));
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < 4; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats BleuCounts(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  BleuStats s;
  s.hyp_len = static_cast<int64_t>(hyp.size());
  s.ref_len = static_cast<int64_t>(ref.size());
  for (size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, int64_t> ref_counts, hyp_counts;
    for (size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
    }
    for (size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hyp_counts[std::vector<std::string>(hyp.begin() + i, hyp.begin() + i + n)];
    }
    int64_t m = 0;
    for (const auto& [gram, count] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) m += std::min(count, it->second);
    }
    s.matches[n - 1] = m;
    s.totals[n - 1] = hyp.size() >= n ? static_cast<int64_t>(hyp.size() - n + 1) : 0;
  }
  return s;
}

BleuResult BleuFromStats(const BleuStats& s) {
  BleuResult r;
  if (s.hyp_len == 0) {
    r.empty_hypothesis = true;
    return r;
  }
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < 4; ++n) {
    const double m = static_cast<double>(s.matches[n]) + (n > 0 ? 1.0 : 0.0);
    const double t = static_cast<double>(s.totals[n]) + (n > 0 ? 1.0 : 0.0);
    r.precisions[n] = m / t;
    if (m == 0.0) {
      zero = true;
    } else {
      log_sum += 0.25 * std::log(r.precisions[n]);
    }
  }
  r.brevity_penalty = s.hyp_len < s.ref_len
                          ? std::exp(1.0 - static_cast<double>(s.ref_len) / s.hyp_len)
                          : 1.0;
  r.score = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum);
  return r;
}

BleuResult SentenceBleu(std::string_view hyp, std::string_view ref, const EquivalenceTable* eq) {
  return BleuFromStats(BleuCounts(ScoringTokens(hyp, eq), ScoringTokens(ref, eq)));
}

BleuResult CorpusBleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                      const EquivalenceTable* eq) {
  if (hyps.size() != refs.size()) {
    throw ContractError("corpus bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                        std::to_string(refs.size()) + " references");
  }
  BleuStats total;
  for (size_t i = 0; i < hyps.size(); ++i) {
    total += BleuCounts(ScoringTokens(hyps[i], eq), ScoringTokens(refs[i], eq));
  }
  return BleuFromStats(total);
}

double BootstrapBleuPValue(const std::vector<std::string>& hyps_a,
                           const std::vector<std::string>& hyps_b,
                           const std::vector<std::string>& refs, int n_resamples,
                           uint64_t seed, const EquivalenceTable* eq) {
  const size_t n = refs.size();
  if (hyps_a.size() != n || hyps_b.size() != n) {
    throw ContractError("bootstrap: hypothesis and reference counts differ");
  }
  if (n < 2) throw ContractError("bootstrap: needs at least 2 segments");
  if (n_resamples < 1) throw ContractError("bootstrap: n_resamples must be positive");
  std::vector<BleuStats> sa(n), sb(n);
  BleuStats ta, tb;
  for (size_t i = 0; i < n; ++i) {
    const auto ref = ScoringTokens(refs[i], eq);
    sa[i] = BleuCounts(ScoringTokens(hyps_a[i], eq), ref);
    sb[i] = BleuCounts(ScoringTokens(hyps_b[i], eq), ref);
    ta += sa[i];
    tb += sb[i];
  }
  const double full = BleuFromStats(ta).score - BleuFromStats(tb).score;
  const int full_sign = (full > 0) - (full < 0);
  std::mt19937_64 rng(Mix64(seed));
  int flips = 0;
  for (int r = 0; r < n_resamples; ++r) {
    BleuStats ra, rb;
    for (size_t k = 0; k < n; ++k) {
      const size_t i = UniformIndex(rng, n);
      ra += sa[i];
      rb += sb[i];
    }
    const double d = BleuFromStats(ra).score - BleuFromStats(rb).score;
    const int sign = (d > 0) - (d < 0);
    if (full_sign == 0 || sign != full_sign) ++flips;
  }
  return std::min(1.0, 2.0 * flips / n_resamples);
}

double MapsswePValue(const std::vector<double>& errors_a, const std::vector<double>& errors_b) {
  if (errors_a.size() != errors_b.size()) {
    throw ContractError("mapsswe: segment counts differ");
  }
  const size_t n = errors_a.size();
  if (n < 2) throw ContractError("mapsswe: needs at least 2 segments");
  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += errors_a[i] - errors_b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = errors_a[i] - errors_b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  if (var == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double z = mean / std::sqrt(var / static_cast<double>(n));
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

std::string SignificanceTag(double p) {
  return p > kSignificanceLevel ? "insignificant" : "significant";
}

}  // namespace dualasr
