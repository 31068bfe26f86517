/* Copyright 2026 The shufload Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "shufload/sampler.hpp"

#include <algorithm>
#include <utility>

#include "shufload/error.hpp"

namespace shufload::sampler {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t Rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t EpochSeed(uint64_t seed, uint64_t epoch) {
  return Mix64(seed ^ (epoch * kGolden));
}

Xoshiro256::Xoshiro256(uint64_t seed) {
  uint64_t state = seed;
  for (auto& word : s_) {
    state += kGolden;
    word = Mix64(state);
  }
}

uint64_t Xoshiro256::Next() {
  const uint64_t result = Rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = Rotl(s_[3], 45);
  return result;
}

uint64_t Xoshiro256::Below(uint64_t bound) {
  unsigned __int128 m = static_cast<unsigned __int128>(Next()) * bound;
  uint64_t low = static_cast<uint64_t>(m);
  if (low < bound) {
    const uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(Next()) * bound;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<uint64_t>(m >> 64);
}

double Xoshiro256::NextDouble() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

const char* ShuffleModeName(ShuffleMode mode) {
  switch (mode) {
    case ShuffleMode::kSequential:
      return "sequential";
    case ShuffleMode::kIndicesMapping:
      return "indices-mapping";
    case ShuffleMode::kBuffered:
      return "buffered";
  }
  return "unknown";
}

ShuffleMode ParseShuffleMode(const std::string& name) {
  if (name == "sequential") return ShuffleMode::kSequential;
  if (name == "indices-mapping" || name == "indices_mapping") {
    return ShuffleMode::kIndicesMapping;
  }
  if (name == "buffered") return ShuffleMode::kBuffered;
  throw Error(ErrorCode::kInvalidArgument, "unknown shuffle mode: " + name);
}

IndexOrder SequentialOrder(uint64_t n) {
  IndexOrder order(n);
  for (uint64_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

IndexOrder MakePermutation(uint64_t n, uint64_t seed, uint64_t epoch) {
  IndexOrder order = SequentialOrder(n);
  Xoshiro256 rng(EpochSeed(seed, epoch));
  for (uint64_t i = n; i > 1; --i) {
    const uint64_t j = rng.Below(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

IndexOrder BufferedShuffleOrder(uint64_t n, uint64_t seed,
                                uint64_t buffer_size) {
  if (buffer_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "buffer_size must be >= 1");
  }
  Xoshiro256 rng(seed);
  const uint64_t fill = std::min(n, buffer_size);
  IndexOrder buffer = SequentialOrder(fill);
  uint64_t next = fill;
  IndexOrder out;
  out.reserve(n);
  while (!buffer.empty()) {
    const uint64_t slot = rng.Below(buffer.size());
    out.push_back(buffer[slot]);
    if (next < n) {
      buffer[slot] = next++;
    } else {
      buffer[slot] = buffer.back();
      buffer.pop_back();
    }
  }
  return out;
}

IndexOrder EpochOrder(const ShuffleSpec& spec, uint64_t n) {
  switch (spec.mode) {
    case ShuffleMode::kSequential:
      return SequentialOrder(n);
    case ShuffleMode::kIndicesMapping:
      return MakePermutation(n, spec.seed, spec.epoch);
    case ShuffleMode::kBuffered:
      return BufferedShuffleOrder(n, EpochSeed(spec.seed, spec.epoch),
                                  spec.buffer_size);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown shuffle mode");
}

std::vector<BatchSpec> PartitionBatches(std::span<const uint64_t> order,
                                        uint64_t batch_size, bool drop_last) {
  if (batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }
  std::vector<BatchSpec> batches;
  batches.reserve(order.size() / batch_size + 1);
  for (uint64_t start = 0; start < order.size(); start += batch_size) {
    const uint64_t end = std::min<uint64_t>(start + batch_size, order.size());
    if (drop_last && end - start < batch_size) break;
    batches.push_back({batches.size(), {order.begin() + start,
                                        order.begin() + end}});
  }
  return batches;
}

IndexOrder ShardForWorker(std::span<const uint64_t> order, uint64_t worker_id,
                          uint64_t world_size) {
  if (world_size < 1 || worker_id >= world_size) {
    throw Error(ErrorCode::kInvalidArgument,
                "worker_id " + std::to_string(worker_id) +
                    " invalid for world_size " + std::to_string(world_size));
  }
  IndexOrder shard;
  shard.reserve(order.size() / world_size + 1);
  for (uint64_t k = worker_id; k < order.size(); k += world_size) {
    shard.push_back(order[k]);
  }
  return shard;
}

std::vector<BatchSpec> EpochPlan::Batches() const {
  return PartitionBatches(order, batch_size, drop_last);
}

EpochPlan MakeEpochPlan(const ShuffleSpec& spec, uint64_t n,
                        uint64_t batch_size, bool drop_last,
                        uint64_t worker_id, uint64_t world_size) {
  if (batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }
  EpochPlan plan;
  IndexOrder full = EpochOrder(spec, n);
  plan.order = world_size == 1 && worker_id == 0
                   ? std::move(full)
                   : ShardForWorker(full, worker_id, world_size);
  plan.batch_size = batch_size;
  plan.drop_last = drop_last;
  plan.worker_id = worker_id;
  plan.world_size = world_size;
  return plan;
}

}  // namespace shufload::sampler
