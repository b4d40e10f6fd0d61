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

#include <string>
#include <vector>

#include "dualasr/data/batching.h"
#include "dualasr/data/manifest.h"
#include "dualasr/features/features.h"
#include "dualasr/model/model.h"
#include "dualasr/text/subword.h"

namespace dualasr {

// Features of a record: the prepared feature file when the record names
// one, otherwise fbank of the (optionally cut) audio followed by utterance
// CMVN. Relative paths resolve against the manifest directory.
FeatureMatrix LoadFeatures(const UtteranceRecord& record, const std::string& manifest_path,
                           const FeatureConfig& config);

// Model input for a record used in the given pool role: a verbatim-pool
// item carries only the verbatim target, a subtitle-pool item only the
// subtitle target. Throws ContractError when the record lacks that text.
Utterance MakeUtterance(const UtteranceRecord& record, const FeatureMatrix& features,
                        const SubwordModel& subwords, Pool role, DType dtype = DType::kF32);

// Feature cache plus pool bookkeeping for epoch iteration.
class Dataset {
 public:
  // Features for every record are computed once up front.
  Dataset(std::vector<UtteranceRecord> verbatim_pool, std::vector<UtteranceRecord> subtitle_pool,
          const std::string& manifest_path, const FeatureConfig& config);

  size_t num_verbatim() const { return verbatim_.size(); }
  size_t num_subtitle() const { return subtitle_.size(); }
  const UtteranceRecord& record(const PoolRef& ref) const;
  const FeatureMatrix& features(const PoolRef& ref) const;
  std::vector<Utterance> Assemble(const std::vector<PoolRef>& batch, const SubwordModel& subwords,
                                  DType dtype = DType::kF32) const;

 private:
  std::vector<UtteranceRecord> verbatim_, subtitle_;
  std::vector<FeatureMatrix> verbatim_feats_, subtitle_feats_;
};

}  // namespace dualasr
