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
#include <vector>

#include "dualasr/losses/losses.h"
#include "dualasr/model/config.h"
#include "dualasr/nn/conformer.h"
#include "dualasr/nn/layers.h"
#include "dualasr/nn/subsampling.h"
#include "dualasr/nn/transformer.h"
#include "dualasr/tensor/tensor.h"
#include "dualasr/text/vocab.h"

namespace dualasr {

// One training example. Targets are subword ids without special tokens.
struct Utterance {
  std::string id;
  Tensor features;  // [T, feat_dim]
  std::optional<std::vector<int64_t>> verbatim;
  std::optional<std::vector<int64_t>> subtitle;
};

// Per-utterance outputs of a training forward pass. Tensors a variant does
// not define, or a target the utterance does not carry, stay undefined.
struct ForwardOutputs {
  Tensor asr_encoder_states;       // [T',d]
  Tensor subtitle_encoder_states;  // [T',d], or [Lv+1,d] for the cascaded decoder
  Tensor verbatim_decoder_states;  // [Lv+1,d]
  Tensor verbatim_logits;          // [Lv+1,V]; unscored for masked <unk> inputs
  Tensor subtitle_logits;          // [Ls+1,V]
  Tensor ctc_logits;               // [T',V]
  Tensor interctc_logits;          // [T',V]
  Tensor subtitle_ctc_logits;      // [T',V]
  std::vector<int64_t> verbatim_inputs;  // decoder input sequences
  std::vector<int64_t> subtitle_inputs;
};

struct StepInfo {
  uint64_t step = 0;
  bool train = true;  // false disables dropout
};

struct TrainOutputs {
  Tensor loss;
  LossComponents parts;
  std::vector<ForwardOutputs> outputs;
  int64_t verbatim_utts = 0, subtitle_utts = 0;
  // Teacher-forced argmax accuracy counts over scored decoder positions.
  int64_t verbatim_correct = 0, verbatim_tokens = 0;
  int64_t subtitle_correct = 0, subtitle_tokens = 0;
};

// Encoder outputs cached for decoding.
struct EncoderCache {
  Tensor asr_states;       // [T',d]
  Tensor subtitle_states;  // undefined until available
  Tensor ctc_log_probs;    // [T',V]
  Tensor subtitle_ctc_log_probs;
};

class Model {
 public:
  explicit Model(const ModelConfig& config, DType dtype = DType::kF32);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  int64_t NumParameters() const { return params_.NumParameters(); }

  bool SupportsTask(vocab::Task task) const;
  bool HasSubtitleCtc() const { return sub_ctc_.weight.defined(); }

  // Joint loss of Eq. 1 (naive) or Eq. 2/3 over a batch, with per-utterance
  // task masking. Throws ContractError on a variant/target mismatch and
  // InfeasibleError (naming the utterance) on an unalignable CTC target.
  TrainOutputs ForwardTrain(std::span<const Utterance> batch, const StepInfo& info) const;

  // Inference-mode encoder pass. For the cascaded decoder the subtitle
  // states are attached later from verbatim decoder states.
  EncoderCache Encode(const Tensor& features) const;
  // Runs the verbatim decoder over `inputs` (starting with <sos>) and feeds
  // its final states through the subtitle encoder. Cascaded decoder only.
  void AttachVerbatimStates(EncoderCache& cache, std::span<const int64_t> inputs) const;

  // Decoder input tokens that precede the first generated token.
  std::vector<int64_t> DecoderPrefix(vocab::Task task) const;
  // Next-token log-probabilities [V] after `inputs` (which include the prefix).
  Tensor NextTokenLogProbs(vocab::Task task, std::span<const int64_t> inputs,
                           const EncoderCache& cache) const;

 private:
  struct Decoder {
    std::vector<nn::DecoderLayer> layers;
    nn::LayerNormParams after_norm;
    nn::Linear out;
  };
  struct Encoded {
    Tensor final_states;
    Tensor inter_states;
  };

  Encoded RunEncoder(const Tensor& features, nn::Dropout* dropout) const;
  Tensor RunSubtitleEncoder(const Tensor& x, nn::Dropout* dropout) const;
  Tensor DecoderStates(const Decoder& dec, std::span<const int64_t> inputs,
                       std::span<const nn::Memory> memories, nn::Dropout* dropout) const;
  const Decoder& DecoderFor(vocab::Task task) const;
  std::vector<nn::Memory> MemoriesFor(vocab::Task task, const Tensor& asr,
                                      const Tensor& sub) const;

  ModelConfig config_;
  nn::ParamStore params_;
  nn::Conv2dSubsampling subsample_;
  std::vector<nn::ConformerLayer> encoder_;
  nn::LayerNormParams enc_after_norm_;
  nn::Linear ctc_;
  std::vector<nn::EncoderLayer> sub_encoder_;
  nn::LayerNormParams sub_after_norm_;
  nn::Linear sub_ctc_;
  Tensor embedding_;  // [V,d], shared by both decoders
  Decoder dec1_;
  Decoder dec2_;
};

}  // namespace dualasr
