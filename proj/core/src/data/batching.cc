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

#include "dualasr/data/batching.h"

#include <algorithm>
#include <random>
#include <string>

#include "dualasr/errors.h"
#include "dualasr/util/hash.h"

namespace dualasr {

namespace {

std::vector<size_t> Permutation(size_t n, std::mt19937_64& rng) {
  std::vector<size_t> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = i;
  Shuffle(v, rng);
  return v;
}

BatchPlan Chunk(const std::vector<PoolRef>& items, int batch_size) {
  BatchPlan plan;
  for (size_t i = 0; i < items.size(); i += batch_size) {
    const size_t end = std::min(items.size(), i + static_cast<size_t>(batch_size));
    plan.emplace_back(items.begin() + i, items.begin() + end);
  }
  return plan;
}

}  // namespace

BatchPlan BuildEpoch(size_t num_verbatim, size_t num_subtitle, int batch_size, uint64_t seed,
                     bool concatenate) {
  if (num_verbatim == 0 && num_subtitle == 0) {
    throw ContractError("build_epoch: both pools are empty");
  }
  if (batch_size < 1) throw ContractError("build_epoch: batch_size must be positive");
  std::mt19937_64 rng(Mix64(seed));

  if (concatenate || num_verbatim == 0 || num_subtitle == 0) {
    std::vector<PoolRef> items;
    for (size_t i = 0; i < num_verbatim; ++i) items.push_back({Pool::kVerbatim, i});
    for (size_t i = 0; i < num_subtitle; ++i) items.push_back({Pool::kSubtitle, i});
    Shuffle(items, rng);
    return Chunk(items, batch_size);
  }
  if (batch_size % 2 != 0) {
    throw ContractError("build_epoch: batch_size must be even with two pools, got " +
                        std::to_string(batch_size));
  }

  const bool verbatim_larger = num_verbatim >= num_subtitle;
  const size_t large_n = verbatim_larger ? num_verbatim : num_subtitle;
  const size_t small_n = verbatim_larger ? num_subtitle : num_verbatim;
  const Pool large_pool = verbatim_larger ? Pool::kVerbatim : Pool::kSubtitle;
  const Pool small_pool = verbatim_larger ? Pool::kSubtitle : Pool::kVerbatim;

  const std::vector<size_t> large = Permutation(large_n, rng);
  std::vector<size_t> small;
  while (small.size() < large_n) {
    const std::vector<size_t> pass = Permutation(small_n, rng);
    small.insert(small.end(), pass.begin(), pass.end());
  }
  small.resize(large_n);

  const size_t half = static_cast<size_t>(batch_size / 2);
  BatchPlan plan;
  for (size_t i = 0; i < large_n; i += half) {
    const size_t end = std::min(large_n, i + half);
    std::vector<PoolRef> batch;
    for (size_t k = i; k < end; ++k) {
      PoolRef v = verbatim_larger ? PoolRef{large_pool, large[k]} : PoolRef{small_pool, small[k]};
      PoolRef s = verbatim_larger ? PoolRef{small_pool, small[k]} : PoolRef{large_pool, large[k]};
      batch.push_back(v);
      batch.push_back(s);
    }
    plan.push_back(std::move(batch));
  }
  return plan;
}

}  // namespace dualasr
