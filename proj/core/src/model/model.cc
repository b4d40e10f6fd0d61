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

#include "dualasr/model/model.h"

#include <cmath>

#include "dualasr/errors.h"
#include "dualasr/losses/ctc.h"
#include "dualasr/tensor/ops.h"
#include "dualasr/util/hash.h"

namespace dualasr {

namespace {

enum Component : uint64_t {
  kEncoderStream = 1,
  kSubEncoderStream = 2,
  kVerbatimStream = 3,
  kSubtitleStream = 4,
};

std::optional<nn::Dropout> MakeDropout(const ModelConfig& c, const StepInfo& info,
                                       const std::string& utt, Component comp) {
  if (!info.train || c.dropout == 0.0) return std::nullopt;
  uint64_t key = HashCombine(HashCombine(c.seed, info.step), Fnv1a64(utt));
  return nn::Dropout(c.dropout, HashCombine(key, comp));
}

nn::Dropout* Ptr(std::optional<nn::Dropout>& d) { return d ? &*d : nullptr; }

// Accumulates per-utterance terms and returns their mean.
struct MeanTerm {
  std::vector<Tensor> items;
  void Add(Tensor t) { items.push_back(std::move(t)); }
  Tensor Mean() const {
    if (items.empty()) return Tensor();
    Tensor s = items[0];
    for (size_t i = 1; i < items.size(); ++i) s = ops::Add(s, items[i]);
    return items.size() == 1 ? s : ops::Scale(s, 1.0 / static_cast<double>(items.size()));
  }
};

void CountArgmax(const Tensor& logits, std::span<const int64_t> targets,
                 std::span<const uint8_t> ignore, int64_t* correct, int64_t* total) {
  const int64_t v = logits.dim(1);
  auto data = logits.data();
  for (size_t i = 0; i < targets.size(); ++i) {
    if (!ignore.empty() && ignore[i]) continue;
    const double* row = data.data() + i * v;
    int64_t best = 0;
    for (int64_t k = 1; k < v; ++k) {
      if (row[k] > row[best]) best = k;
    }
    *correct += best == targets[i];
    ++*total;
  }
}

Tensor Ctc(const Tensor& log_probs, std::span<const int64_t> labels, const std::string& id,
           const char* what) {
  try {
    return CtcLoss(log_probs, labels, vocab::kBlank);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError("utterance '" + id + "' (" + what + "): " + e.what());
  }
}

}  // namespace

Model::Model(const ModelConfig& config, DType dtype)
    : config_(config), params_(config.seed, dtype) {
  config_.Validate();
  const ModelConfig& c = config_;
  const int64_t d = c.d_model, v = c.vocab_size;
  subsample_ = nn::Conv2dSubsampling(params_, "enc.subsample", c.feat_dim, d, c.channels());
  for (int i = 0; i < c.enc_layers; ++i) {
    encoder_.emplace_back(params_, "enc.layer" + std::to_string(i), d, c.n_heads, c.ff_dim,
                          c.conv_kernel, c.rel_pos_base);
  }
  enc_after_norm_ = nn::LayerNormParams(params_, "enc.after_norm", d);
  ctc_ = nn::Linear(params_, "ctc", d, v);
  if (HasSubtitleEncoder(c.variant)) {
    for (int i = 0; i < c.sub_enc_layers; ++i) {
      sub_encoder_.emplace_back(params_, "subenc.layer" + std::to_string(i), d, c.n_heads,
                                c.ff_dim);
    }
    sub_after_norm_ = nn::LayerNormParams(params_, "subenc.after_norm", d);
    if (c.loss.subtitle_ctc) sub_ctc_ = nn::Linear(params_, "subctc", d, v);
  }
  embedding_ = params_.Uniform("embed.weight", {v, d}, std::sqrt(3.0 / static_cast<double>(d)));
  auto build = [&](Decoder& dec, const std::string& name, int sources) {
    for (int i = 0; i < c.dec_layers; ++i) {
      dec.layers.emplace_back(params_, name + ".layer" + std::to_string(i), d, c.n_heads,
                              c.ff_dim, sources);
    }
    dec.after_norm = nn::LayerNormParams(params_, name + ".after_norm", d);
    dec.out = nn::Linear(params_, name + ".out", d, v);
  };
  const bool dual = c.variant == Variant::kCascadedEncoderDual;
  build(dec1_, "dec1", dual ? 2 : 1);
  if (HasSecondDecoder(c.variant)) build(dec2_, "dec2", HasSubtitleEncoder(c.variant) ? 2 : 1);
}

bool Model::SupportsTask(vocab::Task task) const {
  return task == vocab::Task::kVerbatim || SupportsSubtitles(config_.variant);
}

Model::Encoded Model::RunEncoder(const Tensor& features, nn::Dropout* dropout) const {
  if (!features.defined() || features.rank() != 2 || features.dim(0) == 0) {
    throw ContractError("encoder: empty feature matrix");
  }
  if (features.dim(1) != config_.feat_dim) {
    throw ShapeError("encoder: expected feature dim " + std::to_string(config_.feat_dim) +
                     ", got " + ShapeToString(features.shape()));
  }
  Tensor x = features.dtype() == params_.dtype() ? features : features.To(params_.dtype());
  x = nn::MaybeDropout(dropout, subsample_.Forward(x));
  const int64_t t = x.dim(0);
  Encoded out;
  for (size_t i = 0; i < encoder_.size(); ++i) {
    x = encoder_[i].Forward(x, t, dropout);
    if (static_cast<int>(i) + 1 == config_.loss.interctc_layer) {
      out.inter_states = enc_after_norm_(x);
    }
  }
  out.final_states = enc_after_norm_(x);
  return out;
}

Tensor Model::RunSubtitleEncoder(const Tensor& x, nn::Dropout* dropout) const {
  Tensor h = x;
  const int64_t t = x.dim(0);
  for (const auto& layer : sub_encoder_) h = layer.Forward(h, t, dropout);
  return sub_after_norm_(h);
}

Tensor Model::DecoderStates(const Decoder& dec, std::span<const int64_t> inputs,
                            std::span<const nn::Memory> memories, nn::Dropout* dropout) const {
  if (inputs.empty()) throw ContractError("decoder: empty input sequence");
  for (int64_t id : inputs) {
    if (id < 0 || id >= config_.vocab_size) {
      throw ContractError("decoder: token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  const int64_t len = static_cast<int64_t>(inputs.size());
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  Tensor y = ops::Scale(ops::EmbeddingLookup(embedding_, inputs), scale);
  y = ops::Add(y, nn::SinusoidTable(len, config_.d_model, params_.dtype()));
  y = nn::MaybeDropout(dropout, y);
  for (const auto& layer : dec.layers) y = layer.Forward(y, memories, dropout);
  return dec.after_norm(y);
}

const Model::Decoder& Model::DecoderFor(vocab::Task task) const {
  if (task == vocab::Task::kVerbatim) return dec1_;
  switch (config_.variant) {
    case Variant::kNaiveE2E:
      throw UnsupportedTaskError("the naive variant has no subtitle output");
    case Variant::kSharedTaskDecoder:
      return dec1_;
    default:
      return dec2_;
  }
}

std::vector<nn::Memory> Model::MemoriesFor(vocab::Task task, const Tensor& asr,
                                           const Tensor& sub) const {
  std::vector<nn::Memory> m{{asr, asr.dim(0)}};
  const Variant v = config_.variant;
  const bool two = task == vocab::Task::kVerbatim ? v == Variant::kCascadedEncoderDual
                                                  : HasSubtitleEncoder(v);
  if (two) {
    if (!sub.defined()) throw ContractError("subtitle encoder states are not available");
    m.push_back({sub, sub.dim(0)});
  }
  return m;
}

std::vector<int64_t> Model::DecoderPrefix(vocab::Task task) const {
  if (!SupportsTask(task)) {
    throw UnsupportedTaskError("variant " + std::string(VariantName(config_.variant)) +
                               " does not produce " + std::string(vocab::TaskName(task)));
  }
  if (config_.variant == Variant::kSharedTaskDecoder) {
    return {vocab::TaskToken(task), vocab::kSos};
  }
  return {vocab::kSos};
}

TrainOutputs Model::ForwardTrain(std::span<const Utterance> batch, const StepInfo& info) const {
  if (batch.empty()) throw ContractError("forward_train: empty batch");
  const ModelConfig& c = config_;
  const Variant variant = c.variant;
  const double ls = c.loss.smoothing;
  TrainOutputs res;
  res.outputs.resize(batch.size());
  MeanTerm att_asr, ctc, inter, att_subs, ctc_subs;

  for (size_t b = 0; b < batch.size(); ++b) {
    const Utterance& u = batch[b];
    ForwardOutputs& o = res.outputs[b];
    const std::vector<int64_t>* verb = u.verbatim ? &*u.verbatim : nullptr;
    const std::vector<int64_t>* subs = u.subtitle ? &*u.subtitle : nullptr;
    if (variant == Variant::kNaiveE2E && subs) {
      if (!verb && !c.naive_merge_subtitles) {
        throw ContractError("utterance '" + u.id +
                            "': subtitle target given to the naive variant without the "
                            "merge flag");
      }
      if (!verb) verb = subs;
      subs = nullptr;
    }
    if (!verb && !subs) throw ContractError("utterance '" + u.id + "' carries no target");
    for (const auto* seq : {verb, subs}) {
      if (!seq) continue;
      for (int64_t id : *seq) {
        if (!vocab::IsTargetToken(id) || id >= c.vocab_size) {
          throw ContractError("utterance '" + u.id + "': target id " + std::to_string(id) +
                              " cannot appear in a target sequence");
        }
      }
    }

    auto enc_drop = MakeDropout(c, info, u.id, kEncoderStream);
    auto sub_drop = MakeDropout(c, info, u.id, kSubEncoderStream);
    auto verb_drop = MakeDropout(c, info, u.id, kVerbatimStream);
    auto subs_drop = MakeDropout(c, info, u.id, kSubtitleStream);

    Encoded enc = RunEncoder(u.features, Ptr(enc_drop));
    o.asr_encoder_states = enc.final_states;
    const bool need_sub_states =
        variant == Variant::kCascadedEncoderDual ||
        (subs && (variant == Variant::kCascadedEncoder || variant == Variant::kCascadedDecoder));
    if (need_sub_states && variant != Variant::kCascadedDecoder) {
      o.subtitle_encoder_states = RunSubtitleEncoder(enc.final_states, Ptr(sub_drop));
    }

    auto run_task = [&](vocab::Task task, const std::vector<int64_t>* target,
                        nn::Dropout* drop, Tensor* states_out) -> Tensor {
      std::vector<int64_t> inputs = DecoderPrefix(task);
      const size_t skip = inputs.size() - 1;
      std::vector<int64_t> targets(skip, vocab::kBlank);
      std::vector<uint8_t> ignore(skip, 1);
      if (target) {
        inputs.insert(inputs.end(), target->begin(), target->end());
        targets.insert(targets.end(), target->begin(), target->end());
      } else {
        inputs.push_back(vocab::kUnk);
        targets.push_back(vocab::kUnk);
      }
      targets.push_back(vocab::kEos);
      ignore.resize(targets.size(), target ? 0 : 1);
      const auto mem = MemoriesFor(task, o.asr_encoder_states, o.subtitle_encoder_states);
      Tensor states = DecoderStates(DecoderFor(task), inputs, mem, drop);
      if (states_out) *states_out = states;
      (task == vocab::Task::kVerbatim ? o.verbatim_inputs : o.subtitle_inputs) = inputs;
      Tensor logits = DecoderFor(task).out(states);
      if (!target) return logits;
      const bool verbatim = task == vocab::Task::kVerbatim;
      (verbatim ? att_asr : att_subs).Add(LabelSmoothedCe(logits, targets, ls, ignore));
      CountArgmax(logits, targets, ignore,
                  verbatim ? &res.verbatim_correct : &res.subtitle_correct,
                  verbatim ? &res.verbatim_tokens : &res.subtitle_tokens);
      return logits;
    };

    // Verbatim branch. The cascaded decoder also runs it for subtitle-only
    // utterances, with a masked <unk> target, to produce encoder-2 inputs.
    const bool casc_dec = variant == Variant::kCascadedDecoder;
    if (verb || (casc_dec && subs)) {
      o.verbatim_logits = run_task(vocab::Task::kVerbatim, verb, Ptr(verb_drop),
                                   &o.verbatim_decoder_states);
    }
    if (verb) {
      ++res.verbatim_utts;
      o.ctc_logits = ctc_(enc.final_states);
      ctc.Add(Ctc(ops::LogSoftmax(o.ctc_logits), *verb, u.id, "ctc"));
      if (enc.inter_states.defined()) {
        o.interctc_logits = ctc_(enc.inter_states);
        inter.Add(Ctc(ops::LogSoftmax(o.interctc_logits), *verb, u.id, "intermediate ctc"));
      }
    }
    if (subs) {
      ++res.subtitle_utts;
      if (casc_dec) {
        o.subtitle_encoder_states = RunSubtitleEncoder(o.verbatim_decoder_states, Ptr(sub_drop));
      }
      o.subtitle_logits = run_task(vocab::Task::kSubtitle, subs, Ptr(subs_drop), nullptr);
      if (HasSubtitleCtc()) {
        o.subtitle_ctc_logits = sub_ctc_(o.subtitle_encoder_states);
        ctc_subs.Add(Ctc(ops::LogSoftmax(o.subtitle_ctc_logits), *subs, u.id, "subtitle ctc"));
      }
    }
  }

  LossTerms terms{att_asr.Mean(), ctc.Mean(), inter.Mean(), att_subs.Mean(), ctc_subs.Mean()};
  if (variant == Variant::kNaiveE2E) {
    res.loss = AsrLoss(terms.att_asr, terms.ctc, terms.interctc, c.loss);
    LossComponents& p = res.parts;
    p.has_asr = true;
    p.total = p.asr = res.loss.item();
    p.att_asr = terms.att_asr.item();
    p.ctc = terms.ctc.item();
    p.interctc = terms.interctc.defined() ? terms.interctc.item() : 0.0;
  } else {
    res.loss = JointLoss(terms, c.loss, &res.parts);
  }
  return res;
}

EncoderCache Model::Encode(const Tensor& features) const {
  EncoderCache cache;
  Encoded enc = RunEncoder(features, nullptr);
  cache.asr_states = enc.final_states;
  cache.ctc_log_probs = ops::LogSoftmax(ctc_(enc.final_states));
  const Variant v = config_.variant;
  if (v == Variant::kCascadedEncoder || v == Variant::kCascadedEncoderDual) {
    cache.subtitle_states = RunSubtitleEncoder(enc.final_states, nullptr);
    if (HasSubtitleCtc()) {
      cache.subtitle_ctc_log_probs = ops::LogSoftmax(sub_ctc_(cache.subtitle_states));
    }
  }
  return cache;
}

void Model::AttachVerbatimStates(EncoderCache& cache, std::span<const int64_t> inputs) const {
  if (config_.variant != Variant::kCascadedDecoder) {
    throw ContractError("verbatim decoder states feed encoder 2 only in the cascaded decoder");
  }
  const auto mem = MemoriesFor(vocab::Task::kVerbatim, cache.asr_states, Tensor());
  cache.subtitle_states = RunSubtitleEncoder(DecoderStates(dec1_, inputs, mem, nullptr), nullptr);
}

Tensor Model::NextTokenLogProbs(vocab::Task task, std::span<const int64_t> inputs,
                                const EncoderCache& cache) const {
  const Decoder& dec = DecoderFor(task);
  const auto mem = MemoriesFor(task, cache.asr_states, cache.subtitle_states);
  Tensor states = DecoderStates(dec, inputs, mem, nullptr);
  const int64_t len = states.dim(0);
  Tensor last = ops::Slice(states, 0, len - 1, 1);
  return ops::Reshape(ops::LogSoftmax(dec.out(last)), {config_.vocab_size});
}

}  // namespace dualasr
