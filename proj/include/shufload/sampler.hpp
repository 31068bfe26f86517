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
// Epoch index orders: sequential, globally shuffled (indices mapping) and
// streaming-buffer shuffled, plus batching and data-parallel sharding.
//
// Everything here is a pure function of its arguments. The generator is
// specified bit-for-bit (splitmix64 seeding into xoshiro256**, Lemire bounded
// draws) so permutations reproduce across platforms and implementations.
#ifndef SHUFLOAD_SAMPLER_HPP_
#define SHUFLOAD_SAMPLER_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shufload::sampler {

using IndexOrder = std::vector<uint64_t>;

// splitmix64 output finalizer.
uint64_t Mix64(uint64_t x);

// mix64(seed ^ (epoch * golden-ratio constant)).
uint64_t EpochSeed(uint64_t seed, uint64_t epoch);

class Xoshiro256 {
 public:
  explicit Xoshiro256(uint64_t seed);

  uint64_t Next();
  // Uniform in [0, bound), bound >= 1. Unbiased (Lemire with rejection).
  uint64_t Below(uint64_t bound);
  // Uniform in [0, 1) with 53 random bits.
  double NextDouble();

 private:
  std::array<uint64_t, 4> s_;
};

enum class ShuffleMode { kSequential, kIndicesMapping, kBuffered };

const char* ShuffleModeName(ShuffleMode mode);
// Accepts "sequential", "indices-mapping"/"indices_mapping", "buffered".
ShuffleMode ParseShuffleMode(const std::string& name);

struct ShuffleSpec {
  ShuffleMode mode = ShuffleMode::kIndicesMapping;
  uint64_t seed = 0;
  uint64_t epoch = 0;
  uint64_t buffer_size = 1;  // buffered only
};

struct BatchSpec {
  uint64_t batch_ordinal = 0;
  std::vector<uint64_t> indices;
};

struct EpochPlan {
  IndexOrder order;  // this worker's shard of the epoch permutation
  uint64_t batch_size = 1;
  bool drop_last = false;
  uint64_t worker_id = 0;
  uint64_t world_size = 1;

  std::vector<BatchSpec> Batches() const;
};

IndexOrder SequentialOrder(uint64_t n);

// Fisher-Yates over [0, n) driven by Xoshiro256(EpochSeed(seed, epoch)).
IndexOrder MakePermutation(uint64_t n, uint64_t seed, uint64_t epoch);

// Streaming-buffer shuffle: the buffer starts as 0..buffer_size-1; each step
// emits a uniformly chosen slot and refills it with the next sequential index.
IndexOrder BufferedShuffleOrder(uint64_t n, uint64_t seed,
                                uint64_t buffer_size);

IndexOrder EpochOrder(const ShuffleSpec& spec, uint64_t n);

std::vector<BatchSpec> PartitionBatches(std::span<const uint64_t> order,
                                        uint64_t batch_size, bool drop_last);

// order[worker_id::world_size].
IndexOrder ShardForWorker(std::span<const uint64_t> order, uint64_t worker_id,
                          uint64_t world_size);

EpochPlan MakeEpochPlan(const ShuffleSpec& spec, uint64_t n,
                        uint64_t batch_size, bool drop_last,
                        uint64_t worker_id = 0, uint64_t world_size = 1);

}  // namespace shufload::sampler

#endif  // SHUFLOAD_SAMPLER_HPP_
