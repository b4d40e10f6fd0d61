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

#include "dualasr/text/normalize.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "dualasr/errors.h"

namespace dualasr {

namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool IsWordChar(const std::string& ch) {
  if (ch.size() > 1) return true;  // non-ASCII letters
  return std::isalnum(static_cast<unsigned char>(ch[0])) != 0;
}

bool IsPunct(const std::string& ch) {
  return ch.size() == 1 && std::ispunct(static_cast<unsigned char>(ch[0])) != 0;
}

// Drops punctuation inside one word; keeps ' and - between word characters.
std::string StripPunctuation(const std::string& word) {
  const auto chars = Utf8Chars(word);
  std::vector<std::string> kept;
  for (const auto& ch : chars) {
    if (!IsPunct(ch) || ch == "'" || ch == "-") kept.push_back(ch);
  }
  // Joiners survive only with word characters on both sides; repeat until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < kept.size(); ++i) {
      if (kept[i] != "'" && kept[i] != "-") continue;
      const bool left = i > 0 && IsWordChar(kept[i - 1]);
      const bool right = i + 1 < kept.size() && IsWordChar(kept[i + 1]);
      if (!left || !right) {
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  std::string out;
  for (const auto& ch : kept) out += ch;
  return out;
}

std::string RemoveTags(std::string_view text) {
  static const std::regex kTag("<[^<>\\s]+>");
  return std::regex_replace(std::string(text), kTag, " ");
}

}  // namespace

std::vector<std::string> Utf8Chars(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    size_t len = 1;
    if (c >= 0xF0 && c < 0xF8) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = 1;
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> words;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    size_t j = i;
    while (j < text.size() && !IsSpace(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

bool IsTag(std::string_view w) {
  if (w.size() < 3 || w.front() != '<' || w.back() != '>') return false;
  for (size_t i = 1; i + 1 < w.size(); ++i) {
    if (w[i] == '<' || w[i] == '>' || IsSpace(w[i])) return false;
  }
  return true;
}

std::string NormalizeText(std::string_view text, TextMode mode) {
  if (mode == TextMode::kRich) return JoinWords(SplitWhitespace(text));
  std::string s = RemoveTags(text);
  for (char& c : s) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(c));
  }
  std::vector<std::string> words;
  for (const auto& w : SplitWhitespace(s)) {
    std::string stripped = StripPunctuation(w);
    if (!stripped.empty()) words.push_back(std::move(stripped));
  }
  return JoinWords(words);
}

std::string StripForScoring(std::string_view text) {
  std::vector<std::string> words;
  for (const auto& w : SplitWhitespace(RemoveTags(text))) {
    std::string stripped = StripPunctuation(w);
    if (!stripped.empty()) words.push_back(std::move(stripped));
  }
  return JoinWords(words);
}

std::vector<RewriteRule> ParseRewriteRules(std::string_view text) {
  std::vector<RewriteRule> rules;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("rewrite rules line " + std::to_string(lineno) +
                        ": expected pattern<TAB>replacement");
    }
    RewriteRule r;
    r.source = line.substr(0, tab);
    r.replacement = line.substr(tab + 1);
    try {
      r.pattern = std::regex(r.source);
    } catch (const std::regex_error& e) {
      throw FormatError("rewrite rules line " + std::to_string(lineno) + ": " + e.what());
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<RewriteRule> LoadRewriteRules(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open rewrite rules " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ParseRewriteRules(ss.str());
}

std::string ApplyRewriteRules(std::string_view text, const std::vector<RewriteRule>& rules) {
  std::string s(text);
  for (const auto& r : rules) s = std::regex_replace(s, r.pattern, r.replacement);
  return JoinWords(SplitWhitespace(s));
}

}  // namespace dualasr
