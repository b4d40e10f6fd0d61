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

#include "dualasr/decoding/beam_search.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include "dualasr/errors.h"

namespace dualasr {

namespace {

struct Running {
  Hypothesis hyp;
  CtcPrefixState ctc;
};

}  // namespace

void DecodeConfig::Validate() const {
  if (beam < 1) throw ConfigError("decode.beam must be >= 1, got " + std::to_string(beam));
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) {
    throw ConfigError("decode.ctc_weight must be in [0,1]");
  }
  if (!(max_len_ratio > 0.0)) throw ConfigError("decode.max_len_ratio must be positive");
  if (!std::isfinite(length_bonus)) throw ConfigError("decode.length_bonus must be finite");
  if (nbest < 1) throw ConfigError("decode.nbest must be >= 1");
}

bool BetterHypothesis(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

SearchResult BeamSearch(const NextTokenScorer& att, const CtcPrefixScorer* ctc,
                        std::span<const int64_t> candidates, int64_t eos, int64_t max_len,
                        const DecodeConfig& cfg) {
  cfg.Validate();
  if (max_len < 1) throw ContractError("beam search: max_len must be >= 1");
  const double w = ctc ? cfg.ctc_weight : 0.0;
  const bool use_ctc = w > 0.0;
  // Slot i of the beam; empty slots keep positions aligned in nested mode.
  std::vector<std::optional<Running>> running(1);
  running[0].emplace();
  if (use_ctc) running[0]->ctc = ctc->Initial();
  std::vector<Hypothesis> finished;
  Hypothesis best_unfinished;
  auto better = [](const Running& a, const Running& b) { return BetterHypothesis(a.hyp, b.hyp); };
  auto any_running = [&] {
    return std::any_of(running.begin(), running.end(), [](const auto& r) { return r.has_value(); });
  };

  for (int64_t step = 0; step <= max_len && any_running(); ++step) {
    std::vector<std::vector<Running>> ext(running.size());
    for (size_t slot = 0; slot < running.size(); ++slot) {
      if (!running[slot]) continue;
      const Running& r = *running[slot];
      const std::vector<double> logp = att(r.hyp.tokens);
      for (int64_t c : candidates) {
        const bool is_eos = c == eos;
        if (step == max_len && !is_eos) continue;
        if (c < 0 || c >= static_cast<int64_t>(logp.size())) {
          throw ContractError("beam search: candidate outside the scorer's vocabulary");
        }
        Running n;
        n.hyp.tokens = r.hyp.tokens;
        n.hyp.tokens.push_back(c);
        n.hyp.att_logp = r.hyp.att_logp + logp[c];
        n.hyp.finished = is_eos;
        if (use_ctc) {
          if (is_eos) {
            n.hyp.ctc_logp = ctc->Final(r.ctc);
          } else {
            n.ctc = ctc->Extend(r.ctc, c);
            n.hyp.ctc_logp = n.ctc.prefix;
          }
          if (n.hyp.ctc_logp <= kCtcImpossible) continue;
        }
        n.hyp.score = (1.0 - w) * n.hyp.att_logp + w * n.hyp.ctc_logp +
                      cfg.length_bonus * static_cast<double>(n.hyp.tokens.size());
        ext[slot].push_back(std::move(n));
      }
    }
    std::vector<std::optional<Running>> next;
    if (cfg.nested) {
      // Slot i takes the best unused extension of slots 0..i, so the beam of
      // width k always contains the beam of width k-1.
      std::vector<Running> pool;
      auto heap_cmp = [&](const Running& a, const Running& b) { return better(b, a); };
      for (int slot = 0; slot < cfg.beam; ++slot) {
        if (slot < static_cast<int>(ext.size())) {
          for (Running& n : ext[slot]) {
            pool.push_back(std::move(n));
            std::push_heap(pool.begin(), pool.end(), heap_cmp);
          }
        }
        if (pool.empty()) {
          next.emplace_back();
          continue;
        }
        std::pop_heap(pool.begin(), pool.end(), heap_cmp);
        next.emplace_back(std::move(pool.back()));
        pool.pop_back();
      }
    } else {
      std::vector<Running> flat;
      for (auto& e : ext) {
        for (Running& n : e) flat.push_back(std::move(n));
      }
      const size_t keep = std::min<size_t>(cfg.beam, flat.size());
      std::partial_sort(flat.begin(), flat.begin() + keep, flat.end(), better);
      for (size_t i = 0; i < keep; ++i) next.emplace_back(std::move(flat[i]));
    }
    running.clear();
    running.reserve(next.size());
    const Running* best_running = nullptr;
    for (auto& n : next) {
      if (n && n->hyp.finished) {
        finished.push_back(std::move(n->hyp));
        n.reset();
      }
      running.push_back(std::move(n));
      if (running.back() && (!best_running || better(*running.back(), *best_running))) {
        best_running = &*running.back();
      }
    }
    if (best_running) best_unfinished = best_running->hyp;
    // Scores never increase along a hypothesis without a length bonus, so
    // once nbest finished hypotheses beat every running one the n-best list
    // is final.
    if (cfg.length_bonus <= 0.0 && static_cast<int>(finished.size()) >= cfg.nbest) {
      std::sort(finished.begin(), finished.end(), BetterHypothesis);
      const double bar = finished[cfg.nbest - 1].score;
      if (std::all_of(running.begin(), running.end(),
                      [&](const auto& r) { return !r || r->hyp.score < bar; })) {
        break;
      }
    }
  }

  SearchResult res;
  if (finished.empty()) {
    res.unfinished = true;
    res.nbest.push_back(best_unfinished);
    return res;
  }
  std::sort(finished.begin(), finished.end(), BetterHypothesis);
  if (static_cast<int>(finished.size()) > cfg.nbest) finished.resize(cfg.nbest);
  res.nbest = std::move(finished);
  return res;
}

std::vector<int64_t> EmittableTokens(int64_t vocab_size) {
  std::vector<int64_t> out;
  for (int64_t id = 0; id < vocab_size; ++id) {
    if (!vocab::IsNonEmittable(id)) out.push_back(id);
  }
  return out;
}

SearchResult DecodeTask(const Model& model, const EncoderCache& cache, vocab::Task task,
                        const DecodeConfig& cfg) {
  const std::vector<int64_t> prefix = model.DecoderPrefix(task);
  NextTokenScorer att = [&](std::span<const int64_t> generated) {
    std::vector<int64_t> inputs = prefix;
    inputs.insert(inputs.end(), generated.begin(), generated.end());
    Tensor lp = model.NextTokenLogProbs(task, inputs, cache);
    return std::vector<double>(lp.data().begin(), lp.data().end());
  };
  const Tensor* ctc_lp = nullptr;
  if (task == vocab::Task::kVerbatim) {
    ctc_lp = &cache.ctc_log_probs;
  } else if (cfg.subtitle_ctc && cache.subtitle_ctc_log_probs.defined()) {
    ctc_lp = &cache.subtitle_ctc_log_probs;
  }
  std::optional<CtcPrefixScorer> scorer;
  if (ctc_lp && cfg.ctc_weight > 0.0) scorer.emplace(*ctc_lp, vocab::kBlank);
  const int64_t frames = cache.asr_states.dim(0);
  const int64_t max_len =
      std::max<int64_t>(1, static_cast<int64_t>(std::floor(cfg.max_len_ratio * frames)));
  const auto candidates = EmittableTokens(model.config().vocab_size);
  return BeamSearch(att, scorer ? &*scorer : nullptr, candidates, vocab::kEos, max_len, cfg);
}

std::vector<int64_t> HypothesisLabels(const Hypothesis& h) {
  std::vector<int64_t> out = h.tokens;
  if (!out.empty() && out.back() == vocab::kEos) out.pop_back();
  return out;
}

namespace {

SearchResult SubtitleSearch(const Model& model, EncoderCache& cache, const DecodeConfig& cfg,
                            const SearchResult* verbatim) {
  if (model.config().variant == Variant::kCascadedDecoder) {
    std::vector<int64_t> inputs = {vocab::kSos};
    if (cfg.cascaded_unk_states || !verbatim || verbatim->nbest.empty()) {
      inputs.push_back(vocab::kUnk);
    } else {
      const auto labels = HypothesisLabels(verbatim->nbest.front());
      inputs.insert(inputs.end(), labels.begin(), labels.end());
    }
    model.AttachVerbatimStates(cache, inputs);
  }
  return DecodeTask(model, cache, vocab::Task::kSubtitle, cfg);
}

}  // namespace

DualResult DualDecode(const Model& model, const Tensor& features, const DecodeConfig& cfg) {
  if (!model.SupportsTask(vocab::Task::kSubtitle)) {
    throw UnsupportedTaskError("variant " + std::string(VariantName(model.config().variant)) +
                               " cannot produce subtitles");
  }
  EncoderCache cache = model.Encode(features);
  DualResult r;
  r.verbatim = DecodeTask(model, cache, vocab::Task::kVerbatim, cfg);
  r.subtitle = SubtitleSearch(model, cache, cfg, &r.verbatim);
  return r;
}

SearchResult Decode(const Model& model, const Tensor& features, vocab::Task task,
                    const DecodeConfig& cfg) {
  if (!model.SupportsTask(task)) {
    throw UnsupportedTaskError("variant " + std::string(VariantName(model.config().variant)) +
                               " cannot produce " + std::string(vocab::TaskName(task)));
  }
  EncoderCache cache = model.Encode(features);
  if (task == vocab::Task::kVerbatim) return DecodeTask(model, cache, task, cfg);
  if (model.config().variant == Variant::kCascadedDecoder && !cfg.cascaded_unk_states) {
    const SearchResult verbatim = DecodeTask(model, cache, vocab::Task::kVerbatim, cfg);
    return SubtitleSearch(model, cache, cfg, &verbatim);
  }
  return SubtitleSearch(model, cache, cfg, nullptr);
}

nlohmann::json DecodeRecord(const std::string& id, vocab::Task task,
                            const std::vector<std::string>& texts, const SearchResult& r) {
  if (texts.size() != r.nbest.size()) {
    throw ContractError("decode record: one text per n-best entry required");
  }
  nlohmann::json nbest = nlohmann::json::array();
  for (size_t i = 0; i < texts.size(); ++i) {
    nbest.push_back({{"text", texts[i]}, {"score", r.nbest[i].score}});
  }
  nlohmann::json rec = {{"id", id},
                        {"task", std::string(vocab::TaskName(task))},
                        {"text", texts.empty() ? std::string() : texts[0]},
                        {"score", r.nbest.empty() ? 0.0 : r.nbest[0].score},
                        {"n_best", nbest}};
  if (r.unfinished) rec["warning"] = "no hypothesis reached <eos>";
  return rec;
}

}  // namespace dualasr
