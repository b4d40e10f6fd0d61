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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualasr/text/vocab.h"

namespace dualasr {

// Marks the start of a word inside subword pieces.
inline constexpr std::string_view kWordBoundary = "\xE2\x96\x81";  // U+2581

struct SubwordTrainOptions {
  int64_t vocab_size = 5000;  // including the reserved special tokens
  uint64_t seed = 0;          // subtitle sampling
  int64_t min_pair_count = 2;
};

// Byte-pair-encoding subword model in the SentencePiece style: a word
// boundary marker starts every word, merges are learned greedily by pair
// frequency, and encoding repeatedly applies the highest-priority merge.
//
// Ids 0..kNumReserved-1 are the reserved special tokens. Annotation tags
// seen in training (<...> spans) become atomic pieces, in a word-initial
// and a word-internal form. Text characters outside the trained alphabet
// and unknown tags encode to <unk>.
class SubwordModel {
 public:
  // Trains on the verbatim corpus plus a seeded sample of the subtitle
  // corpus truncated (at a word boundary) to the verbatim size in
  // characters. Throws ConfigError when vocab_size cannot hold the reserved
  // tokens, the alphabet and the tags; ContractError on an empty corpus.
  static SubwordModel Train(std::span<const std::string> verbatim,
                            std::span<const std::string> subtitles,
                            const SubwordTrainOptions& options);

  // Versioned text format; see ToString.
  static SubwordModel FromString(std::string_view text);
  static SubwordModel Load(const std::string& path);
  // "#dualasr-subword v1", a specials header line, "#pieces N", then one
  // "piece<TAB>score" line per non-reserved id in id order.
  std::string ToString() const;
  void Save(const std::string& path) const;

  // Subword ids of text (no special framing).
  std::vector<int64_t> Encode(std::string_view text) const;
  // [task, <sos>, ..., <eos>] when a task is given, [<sos>, ..., <eos>] when
  // only add_sos_eos is set.
  std::vector<int64_t> Encode(std::string_view text, std::optional<vocab::Task> task,
                              bool add_sos_eos) const;
  // Drops <blank>, <sos>, <eos> and task tokens; renders <unk> and <spk>.
  // Throws ContractError for ids outside the vocabulary.
  std::string Decode(std::span<const int64_t> ids) const;

  int64_t size() const { return static_cast<int64_t>(pieces_.size()); }
  const std::string& Piece(int64_t id) const;
  // -1 when absent.
  int64_t PieceId(std::string_view piece) const;
  double Score(int64_t id) const { return scores_.at(id); }
  uint64_t Hash() const;

 private:
  void Index();
  void EncodeSegment(const std::string& text, bool word_initial, std::vector<int64_t>* out) const;

  std::vector<std::string> pieces_;
  std::vector<double> scores_;
  std::unordered_map<std::string, int64_t> index_;
};

}  // namespace dualasr
