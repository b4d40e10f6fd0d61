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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dualasr {

enum class Pool { kVerbatim, kSubtitle };

struct PoolRef {
  Pool pool;
  size_t index;
  bool operator==(const PoolRef&) const = default;
};

using BatchPlan = std::vector<std::vector<PoolRef>>;

// One epoch of mixed-task batches. With both pools non-empty every batch
// holds batch_size / 2 items of each pool (the last batch may be smaller but
// stays balanced); the larger pool is visited once in shuffled order and the
// smaller pool is drawn as concatenated shuffled passes, so each of its items
// appears at least once. With one pool empty, batches come from the other
// pool alone. `concatenate` (naive variant) shuffles the union of both pools
// once with no oversampling. Throws ContractError when both pools are empty
// or when batch_size is odd with both pools non-empty (and not concatenating).
BatchPlan BuildEpoch(size_t num_verbatim, size_t num_subtitle, int batch_size, uint64_t seed,
                     bool concatenate = false);

}  // namespace dualasr
