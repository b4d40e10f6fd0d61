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

#include "dualasr/text/subword.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dualasr/errors.h"
#include "dualasr/text/normalize.h"
#include "dualasr/util/hash.h"

namespace dualasr {

namespace {

constexpr std::string_view kHeader = "#dualasr-subword v1";

struct Segment {
  std::string text;
  bool tag = false;
  bool word_initial = false;
};

// Splits a whitespace-free word into tag and text segments.
std::vector<Segment> SplitWord(const std::string& word) {
  std::vector<Segment> out;
  size_t i = 0;
  std::string text;
  auto flush = [&] {
    if (!text.empty()) out.push_back({text, false, out.empty()});
    text.clear();
  };
  while (i < word.size()) {
    if (word[i] == '<') {
      const size_t close = word.find('>', i + 1);
      if (close != std::string::npos) {
        const std::string cand = word.substr(i, close - i + 1);
        if (IsTag(cand)) {
          flush();
          out.push_back({cand, true, out.empty()});
          i = close + 1;
          continue;
        }
      }
    }
    text += word[i++];
  }
  flush();
  return out;
}

int64_t ReservedId(std::string_view name) {
  for (int64_t i = 0; i < vocab::kNumReserved; ++i) {
    if (vocab::kReservedNames[i] == name) return i;
  }
  return -1;
}

using Symbols = std::vector<std::string>;

Symbols TextSymbols(const std::string& text, bool word_initial) {
  Symbols s;
  if (word_initial) s.emplace_back(kWordBoundary);
  for (auto& ch : Utf8Chars(text)) s.push_back(std::move(ch));
  return s;
}

}  // namespace

SubwordModel SubwordModel::Train(std::span<const std::string> verbatim,
                                 std::span<const std::string> subtitles,
                                 const SubwordTrainOptions& opt) {
  if (verbatim.empty()) throw ContractError("subword training: empty verbatim corpus");
  if (subtitles.empty()) throw ContractError("subword training: empty subtitle corpus");
  // Subtitle sample of the verbatim size in characters.
  size_t budget = 0;
  for (const auto& s : verbatim) budget += s.size();
  std::vector<size_t> order(subtitles.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(Mix64(opt.seed));
  Shuffle(order, rng);
  std::vector<std::string> corpus(verbatim.begin(), verbatim.end());
  size_t used = 0;
  for (size_t idx : order) {
    if (used >= budget) break;
    const std::string& line = subtitles[idx];
    if (used + line.size() <= budget) {
      corpus.push_back(line);
      used += line.size();
      continue;
    }
    std::string part;
    for (const auto& w : SplitWhitespace(line)) {
      const size_t add = w.size() + (part.empty() ? 0 : 1);
      if (used + part.size() + add > budget) break;
      if (!part.empty()) part += ' ';
      part += w;
    }
    if (!part.empty()) corpus.push_back(part);
    break;
  }

  std::map<Symbols, int64_t> words;
  std::set<std::string> alphabet{std::string(kWordBoundary)};
  std::set<std::string> tags;
  for (const auto& line : corpus) {
    for (const auto& w : SplitWhitespace(line)) {
      for (const Segment& seg : SplitWord(w)) {
        if (seg.tag) {
          if (ReservedId(seg.text) < 0) tags.insert(seg.text);
          continue;
        }
        Symbols sym = TextSymbols(seg.text, seg.word_initial);
        alphabet.insert(sym.begin(), sym.end());
        ++words[sym];
      }
    }
  }
  const int64_t floor_size = vocab::kNumReserved + static_cast<int64_t>(alphabet.size()) +
                             2 * static_cast<int64_t>(tags.size());
  if (opt.vocab_size < floor_size) {
    throw ConfigError("subword vocab_size " + std::to_string(opt.vocab_size) +
                      " is below the " + std::to_string(floor_size) +
                      " entries needed for the special tokens, alphabet and tags");
  }

  SubwordModel m;
  for (auto name : vocab::kReservedNames) {
    m.pieces_.emplace_back(name);
    m.scores_.push_back(0.0);
  }
  for (const auto& t : tags) {
    m.pieces_.push_back(std::string(kWordBoundary) + t);
    m.scores_.push_back(0.0);
    m.pieces_.push_back(t);
    m.scores_.push_back(0.0);
  }
  for (const auto& a : alphabet) {
    m.pieces_.push_back(a);
    m.scores_.push_back(0.0);
  }
  m.Index();

  std::vector<std::pair<Symbols, int64_t>> types(words.begin(), words.end());
  int64_t rank = 0;
  while (m.size() < opt.vocab_size) {
    std::map<std::pair<std::string, std::string>, int64_t> pairs;
    for (const auto& [sym, n] : types) {
      for (size_t i = 0; i + 1 < sym.size(); ++i) pairs[{sym[i], sym[i + 1]}] += n;
    }
    const std::pair<std::string, std::string>* best = nullptr;
    int64_t best_n = 0;
    for (const auto& [p, n] : pairs) {
      if (n > best_n) {
        best_n = n;
        best = &p;
      }
    }
    if (!best || best_n < opt.min_pair_count) break;
    const std::string merged = best->first + best->second;
    const auto [left, right] = *best;
    ++rank;
    if (m.PieceId(merged) < 0) {
      m.pieces_.push_back(merged);
      m.scores_.push_back(-static_cast<double>(rank));
      m.index_[merged] = m.size() - 1;
    }
    for (auto& [sym, n] : types) {
      Symbols next;
      for (size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(sym[i]);
        }
      }
      sym = std::move(next);
    }
  }
  return m;
}

void SubwordModel::Index() {
  index_.clear();
  for (int64_t i = 0; i < size(); ++i) {
    if (!index_.emplace(pieces_[i], i).second) {
      throw FormatError("subword model: duplicate piece '" + pieces_[i] + "'");
    }
  }
}

const std::string& SubwordModel::Piece(int64_t id) const {
  if (id < 0 || id >= size()) {
    throw ContractError("subword id " + std::to_string(id) + " outside vocabulary of " +
                        std::to_string(size()));
  }
  return pieces_[id];
}

int64_t SubwordModel::PieceId(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? -1 : it->second;
}

void SubwordModel::EncodeSegment(const std::string& text, bool word_initial,
                                 std::vector<int64_t>* out) const {
  Symbols sym = TextSymbols(text, word_initial);
  while (sym.size() > 1) {
    double best_score = 0.0;
    size_t best_i = sym.size();
    for (size_t i = 0; i + 1 < sym.size(); ++i) {
      const int64_t id = PieceId(sym[i] + sym[i + 1]);
      if (id < vocab::kNumReserved || scores_[id] >= 0.0) continue;
      if (best_i == sym.size() || scores_[id] > best_score) {
        best_score = scores_[id];
        best_i = i;
      }
    }
    if (best_i == sym.size()) break;
    sym[best_i] += sym[best_i + 1];
    sym.erase(sym.begin() + static_cast<std::ptrdiff_t>(best_i) + 1);
  }
  for (const auto& s : sym) {
    const int64_t id = PieceId(s);
    out->push_back(id >= vocab::kNumReserved ? id : vocab::kUnk);
  }
}

std::vector<int64_t> SubwordModel::Encode(std::string_view text) const {
  std::vector<int64_t> ids;
  for (const auto& w : SplitWhitespace(text)) {
    for (const Segment& seg : SplitWord(w)) {
      if (!seg.tag) {
        EncodeSegment(seg.text, seg.word_initial, &ids);
        continue;
      }
      const int64_t reserved = ReservedId(seg.text);
      if (reserved == vocab::kSpk) {
        ids.push_back(vocab::kSpk);
      } else if (reserved >= 0) {
        ids.push_back(vocab::kUnk);
      } else {
        const int64_t id =
            PieceId(seg.word_initial ? std::string(kWordBoundary) + seg.text : seg.text);
        ids.push_back(id >= 0 ? id : vocab::kUnk);
      }
    }
  }
  return ids;
}

std::vector<int64_t> SubwordModel::Encode(std::string_view text, std::optional<vocab::Task> task,
                                          bool add_sos_eos) const {
  std::vector<int64_t> ids;
  if (task) ids.push_back(vocab::TaskToken(*task));
  if (task || add_sos_eos) ids.push_back(vocab::kSos);
  const auto body = Encode(text);
  ids.insert(ids.end(), body.begin(), body.end());
  if (task || add_sos_eos) ids.push_back(vocab::kEos);
  return ids;
}

std::string SubwordModel::Decode(std::span<const int64_t> ids) const {
  std::string s;
  for (int64_t id : ids) {
    const std::string& p = Piece(id);
    switch (id) {
      case vocab::kBlank:
      case vocab::kSos:
      case vocab::kEos:
      case vocab::kVerbatim:
      case vocab::kSubtitle:
        continue;
      case vocab::kSpk:
        s += ' ';
        s += p;
        continue;
      case vocab::kUnk:
        s += p;
        continue;
      default:
        break;
    }
    size_t pos = 0;
    while (pos < p.size()) {
      if (p.compare(pos, kWordBoundary.size(), kWordBoundary) == 0) {
        s += ' ';
        pos += kWordBoundary.size();
      } else {
        s += p[pos++];
      }
    }
  }
  return JoinWords(SplitWhitespace(s));
}

std::string SubwordModel::ToString() const {
  std::ostringstream os;
  os << kHeader << "\n#specials";
  for (auto name : vocab::kReservedNames) os << ' ' << name;
  os << "\n#pieces " << size() - vocab::kNumReserved << '\n';
  for (int64_t i = vocab::kNumReserved; i < size(); ++i) {
    os << pieces_[i] << '\t' << static_cast<int64_t>(scores_[i]) << '\n';
  }
  return os.str();
}

SubwordModel SubwordModel::FromString(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  auto fail = [](int lineno, const std::string& what) {
    throw FormatError("subword model line " + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(is, line) || line != kHeader) fail(1, "missing '#dualasr-subword v1' header");
  std::string expected = "#specials";
  for (auto name : vocab::kReservedNames) expected += " " + std::string(name);
  if (!std::getline(is, line) || line != expected) fail(2, "special token block mismatch");
  if (!std::getline(is, line) || line.rfind("#pieces ", 0) != 0) fail(3, "missing '#pieces N'");
  int64_t n = 0;
  try {
    n = std::stoll(line.substr(8));
  } catch (const std::exception&) {
    fail(3, "bad piece count");
  }
  SubwordModel m;
  for (auto name : vocab::kReservedNames) {
    m.pieces_.emplace_back(name);
    m.scores_.push_back(0.0);
  }
  for (int64_t i = 0; i < n; ++i) {
    const int lineno = static_cast<int>(i) + 4;
    if (!std::getline(is, line)) fail(lineno, "truncated piece list");
    const size_t tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) fail(lineno, "expected piece<TAB>score");
    m.pieces_.push_back(line.substr(0, tab));
    try {
      m.scores_.push_back(static_cast<double>(std::stoll(line.substr(tab + 1))));
    } catch (const std::exception&) {
      fail(lineno, "bad score");
    }
  }
  while (std::getline(is, line)) {
    if (!line.empty()) throw FormatError("subword model: trailing content after piece list");
  }
  m.Index();
  return m;
}

SubwordModel SubwordModel::Load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open subword model " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return FromString(ss.str());
}

void SubwordModel::Save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot write subword model " + path);
  os << ToString();
}

uint64_t SubwordModel::Hash() const { return Fnv1a64(ToString()); }

}  // namespace dualasr
