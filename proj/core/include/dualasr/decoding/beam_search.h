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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualasr/decoding/ctc_prefix.h"
#include "dualasr/model/model.h"
#include "dualasr/text/vocab.h"

namespace dualasr {

struct DecodeConfig {
  int beam = 20;
  double ctc_weight = 0.3;
  // Hypotheses hold at most max(1, floor(max_len_ratio * T')) tokens before <eos>.
  double max_len_ratio = 1.0;
  // Added to the score once per generated token (including <eos>); 0 = none.
  double length_bonus = 0.0;
  int nbest = 5;
  // Nested beams: slot i holds the best unused extension of slots 0..i, so
  // the top-1 score never decreases with the beam width. False selects the
  // plain top-k over all extensions.
  bool nested = true;
  // Use the subtitle CTC head (when the model has one) during subtitle search.
  bool subtitle_ctc = false;
  // Cascaded decoder: feed [<sos>, <unk>] instead of the verbatim 1-best
  // decoder states to the subtitle encoder, mirroring training.
  bool cascaded_unk_states = false;

  // Throws ConfigError.
  void Validate() const;
};

struct Hypothesis {
  std::vector<int64_t> tokens;  // generated tokens; ends with <eos> when finished
  double att_logp = 0.0;
  double ctc_logp = 0.0;
  double score = 0.0;
  bool finished = false;
};

struct SearchResult {
  std::vector<Hypothesis> nbest;  // best first
  // Set when no hypothesis reached <eos>; nbest then holds the best running one.
  bool unfinished = false;
};

// Ordering used for ranking and tie-breaking: higher score first, then
// lexicographically smaller token sequence.
bool BetterHypothesis(const Hypothesis& a, const Hypothesis& b);

// Attention log-probabilities [V] of the next token after `generated`.
using NextTokenScorer = std::function<std::vector<double>(std::span<const int64_t> generated)>;

// Joint CTC/attention beam search. Each extension of a running hypothesis by
// a candidate token scores (1-w) att + w ctc, where att is the accumulated
// attention log-probability and ctc the CTC prefix score (the complete
// sequence probability for <eos>). `beam` extensions survive each step (see
// DecodeConfig::nested); those ending in <eos> are finished. With w > 0, extensions whose CTC
// probability is zero are dropped.
SearchResult BeamSearch(const NextTokenScorer& att, const CtcPrefixScorer* ctc,
                        std::span<const int64_t> candidates, int64_t eos, int64_t max_len,
                        const DecodeConfig& cfg);

// Tokens the attention decoders may emit for a vocabulary of size V.
std::vector<int64_t> EmittableTokens(int64_t vocab_size);

// Single-task search on a model over cached encoder states.
SearchResult DecodeTask(const Model& model, const EncoderCache& cache, vocab::Task task,
                        const DecodeConfig& cfg);

struct DualResult {
  SearchResult verbatim;
  SearchResult subtitle;
};

// Runs the encoders once, then the verbatim and subtitle searches. Throws
// UnsupportedTaskError for the naive variant.
DualResult DualDecode(const Model& model, const Tensor& features, const DecodeConfig& cfg);

// Decodes one task for a model (verbatim uses CTC prefix scores; subtitle
// follows DecodeConfig::subtitle_ctc). Cascaded decoders run the verbatim
// search first to obtain decoder states unless cascaded_unk_states is set.
SearchResult Decode(const Model& model, const Tensor& features, vocab::Task task,
                    const DecodeConfig& cfg);

// Strips a trailing <eos>.
std::vector<int64_t> HypothesisLabels(const Hypothesis& h);

// JSONL record {id, task, text, score, n_best:[{text, score}]}.
nlohmann::json DecodeRecord(const std::string& id, vocab::Task task,
                            const std::vector<std::string>& texts, const SearchResult& r);

}  // namespace dualasr
