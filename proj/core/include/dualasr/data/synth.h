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
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualasr/data/manifest.h"
#include "dualasr/features/features.h"

namespace dualasr {

// Synthetic speech corpus: every word is rendered as a two-tone motif, so
// the verbatim text is exactly recoverable from the audio; the subtitle is a
// rule rewrite of the verbatim text.
struct SynthSpec {
  std::vector<std::string> words;
  std::vector<std::string> fillers;
  // Rewrite grammar, applied per word in this order: fillers dropped,
  // one-way substitutions, two-way pronoun swaps.
  std::vector<std::pair<std::string, std::string>> substitutions;
  std::vector<std::pair<std::string, std::string>> pronoun_swaps;
  // Seeded per-word corruption of subtitles on top of the grammar.
  double corrupt_delete = 0.0;
  double corrupt_replace = 0.0;

  int num_utterances = 50;
  int min_words = 2;
  int max_words = 5;
  double filler_prob = 0.25;  // chance of a filler before each word
  int num_speakers = 4;
  int sample_rate = 16000;
  double tone_seconds = 0.08;  // per tone, two tones per word
  double gap_seconds = 0.04;   // silence after each word
  double edge_seconds = 0.05;  // leading and trailing silence
  double jitter_seconds = 0.0; // random extra edge silence, emulating timing noise
  double noise_level = 0.0;    // white noise amplitude
  std::string id_prefix = "syn";

  // 20 content words, 3 fillers and a small rewrite grammar.
  static SynthSpec Default();
  void Validate() const;
  nlohmann::json ToJson() const;
  static SynthSpec FromJson(const nlohmann::json& j);

  std::vector<std::string> AllWords() const;  // words then fillers
};

// The grammar part of the subtitle rewrite (no corruption).
std::string RewriteSubtitle(const std::string& verbatim, const SynthSpec& spec);

// Frequencies (Hz) of the two tones encoding word i of AllWords().
std::pair<double, double> WordMotif(const SynthSpec& spec, size_t i);

struct SynthUtterance {
  UtteranceRecord record;  // audio.path is "<id>.wav" relative to the corpus dir
  Waveform audio;
};

std::vector<SynthUtterance> SynthesizeCorpus(const SynthSpec& spec, uint64_t seed);

// Writes <dir>/<id>.wav files and <dir>/manifest.jsonl (audio paths
// relative to dir). Returns the records as written.
std::vector<UtteranceRecord> WriteSynthCorpus(const SynthSpec& spec, uint64_t seed,
                                              const std::string& dir);

}  // namespace dualasr
