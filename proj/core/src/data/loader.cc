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

#include "dualasr/data/loader.h"

#include <cmath>
#include <map>

#include "dualasr/errors.h"

namespace dualasr {

FeatureMatrix LoadFeatures(const UtteranceRecord& record, const std::string& manifest_path,
                           const FeatureConfig& config) {
  if (record.features) return ReadFeatureFile(ResolvePath(manifest_path, *record.features));
  const Waveform wav = ReadWav(ResolvePath(manifest_path, record.audio.path), config.sample_rate);
  size_t begin = 0, end = wav.samples.size();
  if (record.audio.start) {
    begin = std::min(end, static_cast<size_t>(std::lround(*record.audio.start * wav.sample_rate)));
  }
  if (record.audio.end) {
    end = std::min(end, static_cast<size_t>(std::lround(*record.audio.end * wav.sample_rate)));
  }
  if (end <= begin) throw FormatError("record '" + record.id + "': empty audio span");
  const FeatureMatrix fbank = ComputeFbank(
      std::span<const float>(wav.samples.data() + begin, end - begin), config);
  if (fbank.rows == 0) {
    throw LengthError("record '" + record.id + "': audio shorter than one analysis window");
  }
  return UtteranceCmvn(fbank);
}

Utterance MakeUtterance(const UtteranceRecord& record, const FeatureMatrix& features,
                        const SubwordModel& subwords, Pool role, DType dtype) {
  Utterance u;
  u.id = record.id;
  u.features = features.ToTensor(dtype);
  if (role == Pool::kVerbatim) {
    if (!record.verbatim) throw ContractError("record '" + record.id + "' has no verbatim text");
    u.verbatim = subwords.Encode(*record.verbatim);
  } else {
    if (!record.subtitle) throw ContractError("record '" + record.id + "' has no subtitle text");
    u.subtitle = subwords.Encode(*record.subtitle);
  }
  return u;
}

Dataset::Dataset(std::vector<UtteranceRecord> verbatim_pool,
                 std::vector<UtteranceRecord> subtitle_pool, const std::string& manifest_path,
                 const FeatureConfig& config)
    : verbatim_(std::move(verbatim_pool)), subtitle_(std::move(subtitle_pool)) {
  std::map<std::string, FeatureMatrix> cache;
  auto load = [&](const UtteranceRecord& r) -> const FeatureMatrix& {
    auto it = cache.find(r.id);
    if (it == cache.end()) it = cache.emplace(r.id, LoadFeatures(r, manifest_path, config)).first;
    return it->second;
  };
  for (const auto& r : verbatim_) verbatim_feats_.push_back(load(r));
  for (const auto& r : subtitle_) subtitle_feats_.push_back(load(r));
}

const UtteranceRecord& Dataset::record(const PoolRef& ref) const {
  return ref.pool == Pool::kVerbatim ? verbatim_.at(ref.index) : subtitle_.at(ref.index);
}

const FeatureMatrix& Dataset::features(const PoolRef& ref) const {
  return ref.pool == Pool::kVerbatim ? verbatim_feats_.at(ref.index)
                                     : subtitle_feats_.at(ref.index);
}

std::vector<Utterance> Dataset::Assemble(const std::vector<PoolRef>& batch,
                                         const SubwordModel& subwords, DType dtype) const {
  std::vector<Utterance> out;
  out.reserve(batch.size());
  for (const PoolRef& ref : batch) {
    out.push_back(MakeUtterance(record(ref), features(ref), subwords, ref.pool, dtype));
  }
  return out;
}

}  // namespace dualasr
