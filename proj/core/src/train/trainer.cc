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

#include "dualasr/train/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dualasr/data/batching.h"
#include "dualasr/errors.h"
#include "dualasr/util/hash.h"

namespace dualasr {

namespace fs = std::filesystem;

namespace {

struct Candidate {
  int64_t step;
  double accuracy;
  Checkpoint ckpt;
  std::string path;
};

// Higher accuracy first, later step on ties.
bool Better(const Candidate& a, const Candidate& b) {
  return a.accuracy != b.accuracy ? a.accuracy > b.accuracy : a.step > b.step;
}

std::string StepPath(const std::string& dir, int64_t step) {
  return (fs::path(dir) / "ckpt" / ("step_" + std::to_string(step) + ".dckpt")).string();
}

}  // namespace

nlohmann::json StepLog::ToJson() const {
  nlohmann::json j = {{"step", step}, {"epoch", epoch}, {"lr", lr}, {"grad_norm", grad_norm},
                      {"total", parts.total}};
  if (parts.has_asr) {
    j["att_asr"] = parts.att_asr;
    j["ctc"] = parts.ctc;
    j["interctc"] = parts.interctc;
  }
  if (parts.has_subs) {
    j["att_subs"] = parts.att_subs;
    j["ctc_subs"] = parts.ctc_subs;
  }
  return j;
}

ValidationLog Evaluate(const Model& model, const Dataset& data, const SubwordModel& subwords,
                       int batch_size) {
  NoGradScope no_grad;
  std::vector<PoolRef> refs;
  for (size_t i = 0; i < data.num_verbatim(); ++i) refs.push_back({Pool::kVerbatim, i});
  for (size_t i = 0; i < data.num_subtitle(); ++i) refs.push_back({Pool::kSubtitle, i});
  int64_t correct = 0, tokens = 0;
  double loss = 0.0;
  int batches = 0;
  for (size_t i = 0; i < refs.size(); i += batch_size) {
    const std::vector<PoolRef> chunk(refs.begin() + i,
                                     refs.begin() + std::min(refs.size(), i + batch_size));
    const TrainOutputs out =
        model.ForwardTrain(data.Assemble(chunk, subwords, model.params().dtype()), {0, false});
    correct += out.verbatim_correct + out.subtitle_correct;
    tokens += out.verbatim_tokens + out.subtitle_tokens;
    loss += out.parts.total;
    ++batches;
  }
  ValidationLog v;
  v.accuracy = tokens ? static_cast<double>(correct) / tokens : 0.0;
  v.loss = batches ? loss / batches : 0.0;
  return v;
}

Trainer::Trainer(const RunConfig& config, Model& model, const SubwordModel& subwords,
                 const Dataset& train, const Dataset* valid)
    : config_(config), model_(model), subwords_(subwords), train_(train), valid_(valid) {
  config_.Validate();
  if (subwords.size() != model.config().vocab_size) {
    throw ConfigError("subword model has " + std::to_string(subwords.size()) +
                      " pieces but model.vocab_size is " +
                      std::to_string(model.config().vocab_size));
  }
  const ModelConfig& mc = model.config();
  if (mc.variant == Variant::kNaiveE2E && train.num_subtitle() > 0 && !mc.naive_merge_subtitles) {
    throw ConfigError("naive variant with a subtitle pool needs model.naive_merge_subtitles");
  }
  if (train.num_verbatim() + train.num_subtitle() == 0) {
    throw ContractError("trainer: empty training data");
  }
}

std::vector<Utterance> Trainer::MakeBatch(const std::vector<PoolRef>& refs, int64_t step) const {
  std::vector<Utterance> batch;
  batch.reserve(refs.size());
  for (const PoolRef& ref : refs) {
    const UtteranceRecord& rec = train_.record(ref);
    if (config_.train.spec_augment) {
      std::mt19937_64 rng(HashCombine(HashCombine(config_.seed, static_cast<uint64_t>(step)),
                                      Fnv1a64(rec.id) + static_cast<uint64_t>(ref.pool)));
      const FeatureMatrix aug = SpecAugment(train_.features(ref), config_.spec_augment, rng);
      batch.push_back(MakeUtterance(rec, aug, subwords_, ref.pool, model_.params().dtype()));
    } else {
      batch.push_back(
          MakeUtterance(rec, train_.features(ref), subwords_, ref.pool, model_.params().dtype()));
    }
  }
  return batch;
}

TrainSummary Trainer::Run(const std::function<void(const StepLog&)>& on_step) {
  const TrainLoopConfig& tc = config_.train;
  const std::string& out_dir = config_.data.out_dir;
  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(fs::path(out_dir) / "ckpt");
    config_.Save((fs::path(out_dir) / "run_config.txt").string());
    log.open(fs::path(out_dir) / "train_log.jsonl", std::ios::trunc);
    if (!log) throw FormatError("trainer: cannot write the log in " + out_dir);
  }
  const bool naive = model_.config().variant == Variant::kNaiveE2E;
  AdamW opt(model_.params().tensors(), config_.optim);
  const uint64_t vocab_hash = subwords_.Hash();

  TrainSummary summary;
  std::vector<Candidate> top;
  std::string last_good;
  auto validate = [&](int64_t step) {
    ValidationLog v = Evaluate(model_, valid_ ? *valid_ : train_, subwords_, tc.batch_size);
    v.step = step;
    summary.validations.push_back(v);
    if (log.is_open()) {
      log << nlohmann::json{{"step", step}, {"valid_acc", v.accuracy}, {"valid_loss", v.loss}}.dump()
          << "\n";
    }
    Candidate c{step, v.accuracy, SnapshotModel(model_, vocab_hash, step), ""};
    c.ckpt.header.extra = {{"valid_acc", v.accuracy}};
    if (!out_dir.empty()) {
      c.path = StepPath(out_dir, step);
      WriteCheckpoint(c.path, c.ckpt);
      last_good = c.path;
    }
    top.push_back(std::move(c));
    std::stable_sort(top.begin(), top.end(), Better);
    while (static_cast<int>(top.size()) > tc.average_top_k) {
      if (!top.back().path.empty()) fs::remove(top.back().path);
      top.pop_back();
    }
  };

  int64_t step = 0;
  int epoch = 0;
  bool done = false;
  while (!done) {
    if (tc.max_epochs > 0 && epoch >= tc.max_epochs) break;
    const BatchPlan plan =
        BuildEpoch(train_.num_verbatim(), train_.num_subtitle(), tc.batch_size,
                   HashCombine(config_.seed, static_cast<uint64_t>(epoch)), naive);
    for (const auto& refs : plan) {
      ++step;
      StepLog sl;
      sl.step = step;
      sl.epoch = epoch;
      sl.lr = LearningRate(config_.optim, step);
      try {
        Tape tape;
        TapeScope scope(tape);
        TrainOutputs out = model_.ForwardTrain(MakeBatch(refs, step), {static_cast<uint64_t>(step), true});
        if (!std::isfinite(out.parts.total)) throw NumericError("non-finite loss");
        tape.Backward(out.loss);
        sl.parts = out.parts;
        sl.grad_norm = opt.Step(sl.lr);
        summary.last_loss = sl.parts.total;
        if (log.is_open() && step % tc.log_every == 0) log << sl.ToJson().dump() << "\n";
        if (on_step) on_step(sl);
        if (step % tc.valid_every == 0) validate(step);
      } catch (const NumericError& e) {
        if (log.is_open()) log.flush();
        throw NumericError("training diverged at step " + std::to_string(step) + " (" + e.what() +
                           "); last good checkpoint: " +
                           (last_good.empty() ? std::string("none") : last_good));
      }
      if (step >= tc.max_steps) {
        done = true;
        break;
      }
    }
    ++epoch;
  }
  if (summary.validations.empty() || summary.validations.back().step != step) validate(step);
  summary.steps = step;
  summary.epochs = epoch;

  if (!out_dir.empty()) {
    WriteCheckpoint((fs::path(out_dir) / "last.dckpt").string(),
                    SnapshotModel(model_, vocab_hash, static_cast<uint64_t>(step)));
  }
  std::vector<Checkpoint> chosen;
  for (const Candidate& c : top) {
    chosen.push_back(c.ckpt);
    summary.averaged_steps.push_back(c.step);
  }
  Checkpoint avg = AverageCheckpoints(chosen);
  avg.header.step = static_cast<uint64_t>(step);
  avg.header.extra = {{"averaged_steps", summary.averaged_steps}};
  RestoreModel(avg, model_);
  summary.final_accuracy =
      Evaluate(model_, valid_ ? *valid_ : train_, subwords_, tc.batch_size).accuracy;
  avg.header.extra["valid_acc"] = summary.final_accuracy;
  if (!out_dir.empty()) WriteCheckpoint((fs::path(out_dir) / "final.dckpt").string(), avg);
  if (log.is_open()) {
    log << nlohmann::json{{"final", true}, {"averaged_steps", summary.averaged_steps},
                          {"valid_acc", summary.final_accuracy}}.dump()
        << "\n";
  }
  return summary;
}

}  // namespace dualasr
