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

#include "dualasr/data/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "dualasr/errors.h"
#include "dualasr/text/normalize.h"
#include "dualasr/util/hash.h"

namespace dualasr {

namespace {

constexpr int kNumTones = 8;
constexpr double kLowTone = 300.0;
constexpr double kHighTone = 3400.0;
constexpr double kAmplitude = 0.3;
constexpr double kFadeSeconds = 0.005;

double ToneFrequency(int k) {
  return kLowTone * std::pow(kHighTone / kLowTone, static_cast<double>(k) / (kNumTones - 1));
}

using nlohmann::json;

json PairsToJson(const std::vector<std::pair<std::string, std::string>>& v) {
  json a = json::array();
  for (const auto& [x, y] : v) a.push_back({x, y});
  return a;
}

std::vector<std::pair<std::string, std::string>> PairsFromJson(const json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw FormatError("synth spec: pairs must be [a, b]");
    out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  return out;
}

void AppendSilence(std::vector<float>& w, double seconds, int rate) {
  w.resize(w.size() + static_cast<size_t>(std::lround(seconds * rate)), 0.0f);
}

void AppendTone(std::vector<float>& w, double hz, double seconds, int rate) {
  const int n = static_cast<int>(std::lround(seconds * rate));
  const int fade = std::min(n / 2, static_cast<int>(std::lround(kFadeSeconds * rate)));
  for (int i = 0; i < n; ++i) {
    double env = 1.0;
    if (i < fade) env = static_cast<double>(i) / fade;
    if (n - 1 - i < fade) env = std::min(env, static_cast<double>(n - 1 - i) / fade);
    w.push_back(static_cast<float>(kAmplitude * env *
                                   std::sin(2.0 * std::numbers::pi * hz * i / rate)));
  }
}

}  // namespace

SynthSpec SynthSpec::Default() {
  SynthSpec s;
  s.words = {"ik",   "jij",  "we",     "zij",  "de",   "het",     "een",
             "huis", "auto", "fiets",  "rijden", "zien", "goed",  "mooi",
             "vandaag", "morgen", "niet", "ook", "water", "stad"};
  s.fillers = {"uh", "euh", "hm"};
  s.substitutions = {{"auto", "wagen"}, {"mooi", "prachtig"}};
  s.pronoun_swaps = {{"ik", "we"}};
  return s;
}

std::vector<std::string> SynthSpec::AllWords() const {
  std::vector<std::string> all = words;
  all.insert(all.end(), fillers.begin(), fillers.end());
  return all;
}

void SynthSpec::Validate() const {
  if (words.empty()) throw ConfigError("synth: need at least one word");
  const auto all = AllWords();
  if (all.size() > static_cast<size_t>(kNumTones * (kNumTones - 1))) {
    throw ConfigError("synth: at most " + std::to_string(kNumTones * (kNumTones - 1)) +
                      " words and fillers have distinct motifs");
  }
  std::set<std::string> seen;
  for (const auto& w : all) {
    if (w.empty() || w.find_first_of(" \t\n<>") != std::string::npos) {
      throw ConfigError("synth: invalid word '" + w + "'");
    }
    if (!seen.insert(w).second) throw ConfigError("synth: duplicate word '" + w + "'");
  }
  if (num_utterances < 1) throw ConfigError("synth: num_utterances must be >= 1");
  if (min_words < 1 || max_words < min_words) {
    throw ConfigError("synth: need 1 <= min_words <= max_words");
  }
  auto prob = [](double p, const char* name) {
    if (p < 0.0 || p > 1.0) throw ConfigError(std::string("synth: ") + name + " must be in [0, 1]");
  };
  prob(filler_prob, "filler_prob");
  prob(corrupt_delete, "corrupt_delete");
  prob(corrupt_replace, "corrupt_replace");
  if (num_speakers < 1) throw ConfigError("synth: num_speakers must be >= 1");
  if (sample_rate < 2 * static_cast<int>(kHighTone) + 1) {
    throw ConfigError("synth: sample_rate too low for the motif tones");
  }
  if (tone_seconds <= 0.0 || gap_seconds < 0.0 || edge_seconds < 0.0 || jitter_seconds < 0.0 ||
      noise_level < 0.0) {
    throw ConfigError("synth: durations and noise must be non-negative (tones positive)");
  }
}

json SynthSpec::ToJson() const {
  return {{"words", words},
          {"fillers", fillers},
          {"substitutions", PairsToJson(substitutions)},
          {"pronoun_swaps", PairsToJson(pronoun_swaps)},
          {"corrupt_delete", corrupt_delete},
          {"corrupt_replace", corrupt_replace},
          {"num_utterances", num_utterances},
          {"min_words", min_words},
          {"max_words", max_words},
          {"filler_prob", filler_prob},
          {"num_speakers", num_speakers},
          {"sample_rate", sample_rate},
          {"tone_seconds", tone_seconds},
          {"gap_seconds", gap_seconds},
          {"edge_seconds", edge_seconds},
          {"jitter_seconds", jitter_seconds},
          {"noise_level", noise_level},
          {"id_prefix", id_prefix}};
}

SynthSpec SynthSpec::FromJson(const json& j) {
  SynthSpec s = Default();
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "words") s.words = v.get<std::vector<std::string>>();
      else if (key == "fillers") s.fillers = v.get<std::vector<std::string>>();
      else if (key == "substitutions") s.substitutions = PairsFromJson(v);
      else if (key == "pronoun_swaps") s.pronoun_swaps = PairsFromJson(v);
      else if (key == "corrupt_delete") s.corrupt_delete = v.get<double>();
      else if (key == "corrupt_replace") s.corrupt_replace = v.get<double>();
      else if (key == "num_utterances") s.num_utterances = v.get<int>();
      else if (key == "min_words") s.min_words = v.get<int>();
      else if (key == "max_words") s.max_words = v.get<int>();
      else if (key == "filler_prob") s.filler_prob = v.get<double>();
      else if (key == "num_speakers") s.num_speakers = v.get<int>();
      else if (key == "sample_rate") s.sample_rate = v.get<int>();
      else if (key == "tone_seconds") s.tone_seconds = v.get<double>();
      else if (key == "gap_seconds") s.gap_seconds = v.get<double>();
      else if (key == "edge_seconds") s.edge_seconds = v.get<double>();
      else if (key == "jitter_seconds") s.jitter_seconds = v.get<double>();
      else if (key == "noise_level") s.noise_level = v.get<double>();
      else if (key == "id_prefix") s.id_prefix = v.get<std::string>();
      else throw FormatError("synth spec: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("synth spec: ") + e.what());
  }
  s.Validate();
  return s;
}

std::string RewriteSubtitle(const std::string& verbatim, const SynthSpec& spec) {
  std::vector<std::string> out;
  for (std::string w : SplitWhitespace(verbatim)) {
    if (std::find(spec.fillers.begin(), spec.fillers.end(), w) != spec.fillers.end()) continue;
    for (const auto& [from, to] : spec.substitutions) {
      if (w == from) {
        w = to;
        break;
      }
    }
    for (const auto& [a, b] : spec.pronoun_swaps) {
      if (w == a) {
        w = b;
        break;
      }
      if (w == b) {
        w = a;
        break;
      }
    }
    out.push_back(w);
  }
  return JoinWords(out);
}

std::pair<double, double> WordMotif(const SynthSpec& spec, size_t i) {
  if (i >= spec.AllWords().size()) throw ContractError("synth: word index out of range");
  size_t k = 0;
  for (int a = 0; a < kNumTones; ++a) {
    for (int b = 0; b < kNumTones; ++b) {
      if (a == b) continue;
      if (k++ == i) return {ToneFrequency(a), ToneFrequency(b)};
    }
  }
  throw ContractError("synth: no motif for word " + std::to_string(i));
}

std::vector<SynthUtterance> SynthesizeCorpus(const SynthSpec& spec, uint64_t seed) {
  spec.Validate();
  const std::vector<std::string> all = spec.AllWords();
  std::mt19937_64 rng(Mix64(seed));
  std::vector<SynthUtterance> out;
  const int width = static_cast<int>(std::to_string(spec.num_utterances).size());
  for (int u = 0; u < spec.num_utterances; ++u) {
    const int n_words =
        spec.min_words + static_cast<int>(UniformIndex(rng, spec.max_words - spec.min_words + 1));
    std::vector<size_t> tokens;
    for (int k = 0; k < n_words; ++k) {
      if (!spec.fillers.empty() && UniformUnit(rng) < spec.filler_prob) {
        tokens.push_back(spec.words.size() + UniformIndex(rng, spec.fillers.size()));
      }
      tokens.push_back(UniformIndex(rng, spec.words.size()));
    }
    std::vector<std::string> verbatim_words;
    for (size_t t : tokens) verbatim_words.push_back(all[t]);
    const std::string verbatim = JoinWords(verbatim_words);

    std::vector<std::string> sub = SplitWhitespace(RewriteSubtitle(verbatim, spec));
    std::vector<std::string> corrupted;
    for (size_t k = 0; k < sub.size(); ++k) {
      const double r = UniformUnit(rng);
      const bool last_chance = corrupted.empty() && k + 1 == sub.size();
      if (r < spec.corrupt_delete && !last_chance) continue;
      if (r < spec.corrupt_delete + spec.corrupt_replace) {
        corrupted.push_back(spec.words[UniformIndex(rng, spec.words.size())]);
      } else {
        corrupted.push_back(sub[k]);
      }
    }

    SynthUtterance s;
    s.audio.sample_rate = spec.sample_rate;
    std::vector<float>& w = s.audio.samples;
    AppendSilence(w, spec.edge_seconds + spec.jitter_seconds * UniformUnit(rng), spec.sample_rate);
    for (size_t t : tokens) {
      const auto [f1, f2] = WordMotif(spec, t);
      AppendTone(w, f1, spec.tone_seconds, spec.sample_rate);
      AppendTone(w, f2, spec.tone_seconds, spec.sample_rate);
      AppendSilence(w, spec.gap_seconds, spec.sample_rate);
    }
    AppendSilence(w, spec.edge_seconds + spec.jitter_seconds * UniformUnit(rng), spec.sample_rate);
    if (spec.noise_level > 0.0) {
      for (float& x : w) x += static_cast<float>(spec.noise_level * (2.0 * UniformUnit(rng) - 1.0));
    }

    std::string num = std::to_string(u);
    num.insert(0, width - num.size(), '0');
    UtteranceRecord& r = s.record;
    r.id = spec.id_prefix + num;
    r.audio.path = r.id + ".wav";
    r.speaker = "spk" + std::to_string(UniformIndex(rng, spec.num_speakers));
    r.verbatim = verbatim;
    r.subtitle = JoinWords(corrupted);
    r.duration = static_cast<double>(w.size()) / spec.sample_rate;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<UtteranceRecord> WriteSynthCorpus(const SynthSpec& spec, uint64_t seed,
                                              const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<UtteranceRecord> records;
  for (const SynthUtterance& s : SynthesizeCorpus(spec, seed)) {
    WriteWav((std::filesystem::path(dir) / s.record.audio.path).string(), s.audio);
    records.push_back(s.record);
  }
  WriteManifest((std::filesystem::path(dir) / "manifest.jsonl").string(), records);
  return records;
}

}  // namespace dualasr
