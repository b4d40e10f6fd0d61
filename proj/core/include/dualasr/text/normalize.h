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

#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace dualasr {

enum class TextMode {
  kNormalized,  // lower-case, no punctuation, no annotation tags
  kRich,        // punctuation, capitalization and tags kept
};

// Splits UTF-8 text into code points (each returned as its byte string).
// Invalid bytes are returned one by one.
std::vector<std::string> Utf8Chars(std::string_view text);

std::vector<std::string> SplitWhitespace(std::string_view text);
std::string JoinWords(const std::vector<std::string>& words);

// Annotation tags are <...> spans without whitespace, e.g. <*d> or <spk>.
bool IsTag(std::string_view word);

// Normalized: ASCII lower-casing, tags removed, punctuation removed except
// apostrophes and hyphens between letters/digits, whitespace collapsed.
// Rich: whitespace collapsed only. Both modes are idempotent.
std::string NormalizeText(std::string_view text, TextMode mode);

// Text as compared by WER and BLEU: tags (task tokens, <spk>, annotation
// tags) and punctuation removed, whitespace collapsed. Case is kept.
std::string StripForScoring(std::string_view text);

// Ordered regex rewrite rules for corpus-specific cleanup.
struct RewriteRule {
  std::regex pattern;
  std::string replacement;
  std::string source;  // original pattern text
};

// Reads "pattern<TAB>replacement" lines; '#' starts a comment line.
// Throws FormatError with the line number on a malformed rule.
std::vector<RewriteRule> LoadRewriteRules(const std::string& path);
std::vector<RewriteRule> ParseRewriteRules(std::string_view text);
std::string ApplyRewriteRules(std::string_view text, const std::vector<RewriteRule>& rules);

}  // namespace dualasr
