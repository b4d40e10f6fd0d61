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
#include <string>
#include <vector>

#include "dualasr/data/loader.h"
#include "dualasr/model/checkpoint.h"
#include "dualasr/model/model.h"
#include "dualasr/text/subword.h"
#include "dualasr/train/run_config.h"

namespace dualasr {

struct StepLog {
  int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double grad_norm = 0.0;
  LossComponents parts;
  nlohmann::json ToJson() const;
};

struct ValidationLog {
  int64_t step = 0;
  double accuracy = 0.0;  // teacher-forced next-token accuracy
  double loss = 0.0;
};

struct TrainSummary {
  int64_t steps = 0;
  int epochs = 0;
  double last_loss = 0.0;
  std::vector<ValidationLog> validations;
  std::vector<int64_t> averaged_steps;  // checkpoints in the final average
  double final_accuracy = 0.0;          // of the averaged model
};

// Teacher-forced accuracy and mean loss over every item of both pools, with
// dropout off.
ValidationLog Evaluate(const Model& model, const Dataset& data, const SubwordModel& subwords,
                       int batch_size);

// Training loop: seeded mixed-task epochs, AdamW with warmup and decay,
// periodic validation, top-k checkpoint averaging at the end (the model is
// left holding the averaged parameters).
//
// With a non-empty data.out_dir the trainer writes run_config.txt,
// train_log.jsonl, ckpt/step_N.dckpt for the current top-k, last.dckpt and
// final.dckpt. A non-finite loss or gradient aborts with NumericError; the
// checkpoints written so far are kept.
class Trainer {
 public:
  Trainer(const RunConfig& config, Model& model, const SubwordModel& subwords,
          const Dataset& train, const Dataset* valid = nullptr);

  TrainSummary Run(const std::function<void(const StepLog&)>& on_step = {});

 private:
  std::vector<Utterance> MakeBatch(const std::vector<PoolRef>& refs, int64_t step) const;

  RunConfig config_;
  Model& model_;
  const SubwordModel& subwords_;
  const Dataset& train_;
  const Dataset* valid_;
};

}  // namespace dualasr
