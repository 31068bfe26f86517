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
// Batch generation over an opened dataset.
//
// GenerateBatchOrdered is the conventional loader: one sample at a time in
// requested order. FetchEngine runs the unordered variant: every sample of a
// batch is fetched on a pool worker, preprocessed on that same worker as soon
// as it arrives, and placed in the batch in completion order. EpochLoader
// strings batches together with bounded prefetch while keeping inter-batch
// order intact.
#ifndef SHUFLOAD_FETCH_HPP_
#define SHUFLOAD_FETCH_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "shufload/format.hpp"
#include "shufload/sampler.hpp"

namespace shufload::fetch {

using format::Bytes;
using format::DatasetHandle;
using sampler::BatchSpec;

// Deterministic payload transform; must tolerate concurrent calls on
// distinct samples. An empty function is the identity.
using PreprocessFn = std::function<Bytes(uint64_t global_index, Bytes payload)>;

enum class Assembly { kArrivalOrder, kSlotOrder };

struct FetchConfig {
  size_t max_concurrent_fetches = 1;
  size_t prefetch_depth = 0;
  Assembly assembly = Assembly::kArrivalOrder;
  std::chrono::microseconds synthetic_read_latency{0};

  // min(batch_size, 4 x hardware threads).
  static size_t DefaultConcurrency(size_t batch_size);
  void Validate() const;
};

struct StageTimes {
  int64_t index_lookup_ns = 0;
  int64_t read_ns = 0;
  int64_t decode_ns = 0;
  int64_t preprocess_ns = 0;
  int64_t assemble_ns = 0;

  StageTimes& operator+=(const StageTimes& other);
};

struct FetchedSample {
  uint64_t global_index = 0;
  Bytes payload;

  bool operator==(const FetchedSample&) const = default;
};

struct AssembledBatch {
  uint64_t batch_ordinal = 0;
  std::vector<FetchedSample> samples;
  std::vector<uint64_t> requested;
  std::vector<uint64_t> arrival_order;
  StageTimes times;
};

AssembledBatch GenerateBatchOrdered(const DatasetHandle& handle,
                                    const BatchSpec& batch,
                                    const PreprocessFn& preprocess = {},
                                    const format::ReadOptions& read = {});

// Fixed-size worker pool with a FIFO queue.
class WorkerPool {
 public:
  explicit WorkerPool(size_t threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void Submit(std::function<void()> task);
  size_t size() const { return threads_.size(); }

 private:
  void Run();

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

// One batch whose sample fetches have been queued on a FetchEngine.
class PendingBatch {
 public:
  // Blocks until every sample task finished or was skipped. Rethrows the
  // first failure (an Error carrying the failing global index).
  AssembledBatch Wait();
  void Cancel() { cancelled_.store(true); }
  bool done() const;

 private:
  friend class FetchEngine;

  void Finish(std::exception_ptr error);

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  size_t remaining_ = 0;
  std::atomic<bool> cancelled_{false};
  std::exception_ptr error_;
  AssembledBatch batch_;
  std::vector<bool> filled_;
};

class FetchEngine {
 public:
  explicit FetchEngine(const FetchConfig& config);
  FetchEngine(const FetchEngine&) = delete;
  FetchEngine& operator=(const FetchEngine&) = delete;

  const FetchConfig& config() const { return config_; }

  // The handle and preprocess function must outlive the returned batch's
  // Wait().
  std::shared_ptr<PendingBatch> Submit(const DatasetHandle& handle,
                                       const BatchSpec& batch,
                                       const PreprocessFn& preprocess);

  AssembledBatch GenerateUnordered(const DatasetHandle& handle,
                                   const BatchSpec& batch,
                                   const PreprocessFn& preprocess = {});

  size_t peak_in_flight_fetches() const { return peak_in_flight_.load(); }

 private:
  void RunSample(const DatasetHandle& handle, const PreprocessFn& preprocess,
                 const std::shared_ptr<PendingBatch>& pending, size_t slot);

  FetchConfig config_;
  std::atomic<size_t> in_flight_{0};
  std::atomic<size_t> peak_in_flight_{0};
  // Declared last so workers stop before the counters go away.
  WorkerPool pool_;
};

AssembledBatch GenerateBatchUnordered(const DatasetHandle& handle,
                                      const BatchSpec& batch,
                                      const FetchConfig& config,
                                      const PreprocessFn& preprocess = {});

enum class Generation { kOrdered, kUnordered };
enum class ErrorPolicy { kFailFast, kSkipAndReport };

struct LoaderOptions {
  FetchConfig fetch;
  Generation generation = Generation::kUnordered;
  ErrorPolicy error_policy = ErrorPolicy::kFailFast;
};

struct BatchFailure {
  uint64_t batch_ordinal = 0;
  std::optional<uint64_t> global_index;
  std::string message;
};

// Yields the planned batches in batch_ordinal order. At most
// prefetch_depth + 1 batches have outstanding work at any instant. Driven by
// one consumer at a time. An engine may be shared across consecutive loaders
// (e.g. one per epoch); otherwise the loader creates its own.
class EpochLoader {
 public:
  EpochLoader(std::shared_ptr<const DatasetHandle> handle,
              std::vector<BatchSpec> batches, const LoaderOptions& options,
              PreprocessFn preprocess = {},
              std::shared_ptr<FetchEngine> engine = nullptr);
  ~EpochLoader();
  EpochLoader(const EpochLoader&) = delete;
  EpochLoader& operator=(const EpochLoader&) = delete;

  // Next batch, or nullopt when the epoch is exhausted. Under kFailFast a
  // failed batch throws and ends the stream.
  std::optional<AssembledBatch> Next();

  const std::vector<BatchFailure>& failures() const { return failures_; }
  size_t peak_in_flight_batches() const { return peak_in_flight_batches_; }
  size_t peak_in_flight_fetches() const;
  size_t total_batches() const { return batches_.size(); }

 private:
  void Launch();
  void Drain();

  std::shared_ptr<const DatasetHandle> handle_;
  std::vector<BatchSpec> batches_;
  LoaderOptions options_;
  PreprocessFn preprocess_;
  std::shared_ptr<FetchEngine> engine_;
  std::deque<std::shared_ptr<PendingBatch>> in_flight_;
  size_t next_launch_ = 0;
  size_t next_yield_ = 0;
  size_t peak_in_flight_batches_ = 0;
  bool terminated_ = false;
  std::vector<BatchFailure> failures_;
};

}  // namespace shufload::fetch

#endif  // SHUFLOAD_FETCH_HPP_
