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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualasr/data/filter.h"
#include "dualasr/decoding/beam_search.h"
#include "dualasr/features/features.h"
#include "dualasr/text/longform.h"
#include "dualasr/text/normalize.h"
#include "dualasr/text/vocab.h"
#include "dualasr/train/run_config.h"
#include "dualasr/train/trainer.h"

// End-to-end operations behind the command-line subcommands.
namespace dualasr {

struct PrepareOptions {
  std::string manifest;
  std::string out_dir;
  FeatureConfig features;
  std::optional<TextMode> text_mode;  // applied to both texts when set
  int64_t vocab_size = 200;
  uint64_t seed = 0;
  std::string subwords;               // reuse this model instead of training one
  bool longform = false;
  LongformOptions longform_options;
};

struct PrepareResult {
  size_t utterances = 0;
  size_t longform_utterances = 0;
  std::vector<std::string> warnings;
};

// Writes into out_dir:
//   manifest.jsonl    input records with normalized texts, absolute audio
//                     paths and "features": "feats/<id>.feat"
//   feats/*.feat      fbank + CMVN feature files
//   subwords.model    trained (or copied) subword model
//   targets.jsonl     {"id", "verbatim"?: [ids], "subtitle"?: [ids]}
//   longform.jsonl    merged records (with --longform); their feature
//                     files hold the concatenated source features
//   prepare.json      summary
// Outputs are staged in a sibling directory and moved into place at the
// end, so a failure leaves no partial output. Reruns with unchanged inputs
// are byte-identical.
PrepareResult Prepare(const PrepareOptions& options);

// Trains from a run configuration (data.train_manifest, data.subwords,
// data.out_dir). model.vocab_size follows the subword model and model.seed
// follows run.seed.
TrainSummary TrainFromConfig(RunConfig config,
                             const std::function<void(const StepLog&)>& on_step = {});

struct DecodeOptions {
  std::string checkpoint;
  std::string subwords;
  std::string manifest;
  std::string out;
  std::vector<vocab::Task> tasks = {vocab::Task::kVerbatim};
  DecodeConfig decode;
  FeatureConfig features;
  int threads = 1;
};

// One hypothesis line per record and task, in manifest order. Returns the
// number of lines written.
size_t DecodeManifest(const DecodeOptions& options);

// Thread count from DUALASR_THREADS (default 1). Throws ConfigError on a
// malformed value.
int ThreadsFromEnv();

struct HypothesisLine {
  std::string id;
  vocab::Task task;
  std::string text;
};
std::vector<HypothesisLine> ReadHypotheses(const std::string& path);

struct ScoreOptions {
  std::string hyps;
  std::string refs;      // manifest
  std::string compare;   // optional second hypothesis file
  vocab::Task task = vocab::Task::kVerbatim;
  std::string equivalences;
  int resamples = 1000;
  uint64_t seed = 0;
  std::string per_utterance_tsv;
};

// WER and BLEU of the hypotheses against the task's reference texts, plus
// MAPSSWE and bootstrap p-values when a comparison file is given. Throws
// ContractError listing references without a hypothesis.
nlohmann::json Score(const ScoreOptions& options);

struct FilterOptions {
  std::string manifest;
  std::string hyps;
  vocab::Task hyp_task = vocab::Task::kVerbatim;
  double threshold = 0.0;
  std::string out;
  std::string report;
  std::string equivalences;
};
FilterReport FilterManifest(const FilterOptions& options);

// Header, parameter count and array manifest of a checkpoint.
nlohmann::json InspectCheckpoint(const std::string& path);

}  // namespace dualasr
