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
#include "shufload/fetch.hpp"

#include <algorithm>

namespace shufload::fetch {
namespace {

using Clock = std::chrono::steady_clock;

int64_t ElapsedNs(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              since)
      .count();
}

// Rewraps a sample-level failure so the message and location name the batch
// and the global index.
Error SampleFailure(uint64_t batch_ordinal, uint64_t global_index,
                    std::exception_ptr cause) {
  ErrorCode code = ErrorCode::kInvalidArgument;
  std::optional<uint64_t> chunk;
  std::string what;
  try {
    std::rethrow_exception(cause);
  } catch (const Error& e) {
    code = e.code();
    chunk = e.chunk();
    what = e.what();
  } catch (const std::exception& e) {
    what = std::string("preprocess failed: ") + e.what();
  } catch (...) {
    what = "preprocess failed";
  }
  Error err(code, "batch " + std::to_string(batch_ordinal) + ", sample " +
                      std::to_string(global_index) + ": " + what);
  err.WithSample(global_index);
  if (chunk) err.WithChunk(*chunk);
  return err;
}

}  // namespace

size_t FetchConfig::DefaultConcurrency(size_t batch_size) {
  const size_t hw = std::max<size_t>(1, std::thread::hardware_concurrency());
  return std::max<size_t>(1, std::min(batch_size, 4 * hw));
}

void FetchConfig::Validate() const {
  if (max_concurrent_fetches < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_concurrent_fetches must be >= 1");
  }
  if (synthetic_read_latency.count() < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "synthetic_read_latency must be >= 0");
  }
}

StageTimes& StageTimes::operator+=(const StageTimes& other) {
  index_lookup_ns += other.index_lookup_ns;
  read_ns += other.read_ns;
  decode_ns += other.decode_ns;
  preprocess_ns += other.preprocess_ns;
  assemble_ns += other.assemble_ns;
  return *this;
}

AssembledBatch GenerateBatchOrdered(const DatasetHandle& handle,
                                    const BatchSpec& batch,
                                    const PreprocessFn& preprocess,
                                    const format::ReadOptions& read) {
  AssembledBatch out;
  out.batch_ordinal = batch.batch_ordinal;
  out.requested = batch.indices;
  out.samples.reserve(batch.indices.size());
  for (const uint64_t index : batch.indices) {
    format::ReadTimings timings;
    Bytes payload;
    try {
      payload = handle.GetSample(index, read, &timings).payload;
      const auto t = Clock::now();
      if (preprocess) payload = preprocess(index, std::move(payload));
      out.times.preprocess_ns += ElapsedNs(t);
    } catch (...) {
      throw SampleFailure(batch.batch_ordinal, index, std::current_exception());
    }
    const auto t = Clock::now();
    out.samples.push_back({index, std::move(payload)});
    out.arrival_order.push_back(index);
    out.times.index_lookup_ns += timings.index_lookup_ns;
    out.times.read_ns += timings.read_ns;
    out.times.decode_ns += timings.decode_ns;
    out.times.assemble_ns += ElapsedNs(t);
  }
  return out;
}

// --- WorkerPool -----------------------------------------------------------------------

WorkerPool::WorkerPool(size_t threads) {
  threads_.reserve(threads);
  for (size_t i = 0; i < threads; ++i) threads_.emplace_back([this] { Run(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::Submit(std::function<void()> task) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    queue_.push_back(std::move(task));
  }
  cv_.notify_one();
}

void WorkerPool::Run() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping and drained
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

// --- PendingBatch ------------------------------------------------------------------------

void PendingBatch::Finish(std::exception_ptr error) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (error && !error_) error_ = std::move(error);
  if (--remaining_ == 0) cv_.notify_all();
}

bool PendingBatch::done() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return remaining_ == 0;
}

AssembledBatch PendingBatch::Wait() {
  std::unique_lock<std::mutex> lock(mutex_);
  cv_.wait(lock, [this] { return remaining_ == 0; });
  if (error_) std::rethrow_exception(error_);
  return std::move(batch_);
}

// --- FetchEngine -------------------------------------------------------------------------

FetchEngine::FetchEngine(const FetchConfig& config)
    : config_(config), pool_((config.Validate(), config.max_concurrent_fetches)) {}

std::shared_ptr<PendingBatch> FetchEngine::Submit(
    const DatasetHandle& handle, const BatchSpec& batch,
    const PreprocessFn& preprocess) {
  auto pending = std::make_shared<PendingBatch>();
  const size_t n = batch.indices.size();
  pending->batch_.batch_ordinal = batch.batch_ordinal;
  pending->batch_.requested = batch.indices;
  if (config_.assembly == Assembly::kSlotOrder) {
    pending->batch_.samples.resize(n);
  } else {
    pending->batch_.samples.reserve(n);
  }
  pending->batch_.arrival_order.reserve(n);
  pending->remaining_ = n;
  for (size_t slot = 0; slot < n; ++slot) {
    pool_.Submit([this, &handle, &preprocess, pending, slot] {
      RunSample(handle, preprocess, pending, slot);
    });
  }
  return pending;
}

void FetchEngine::RunSample(const DatasetHandle& handle,
                            const PreprocessFn& preprocess,
                            const std::shared_ptr<PendingBatch>& pending,
                            size_t slot) {
  if (pending->cancelled_.load()) {
    pending->Finish(nullptr);
    return;
  }
  const uint64_t index = pending->batch_.requested[slot];
  StageTimes times;
  try {
    format::ReadTimings timings;
    format::SampleRecord record;
    {
      const size_t now = in_flight_.fetch_add(1) + 1;
      size_t peak = peak_in_flight_.load();
      while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
      }
      struct Leave {
        std::atomic<size_t>& counter;
        ~Leave() { counter.fetch_sub(1); }
      } leave{in_flight_};
      record = handle.GetSample(
          index, format::ReadOptions{config_.synthetic_read_latency},
          &timings);
    }
    times.index_lookup_ns = timings.index_lookup_ns;
    times.read_ns = timings.read_ns;
    times.decode_ns = timings.decode_ns;

    Bytes payload = std::move(record.payload);
    const auto t = Clock::now();
    if (preprocess) payload = preprocess(index, std::move(payload));
    times.preprocess_ns = ElapsedNs(t);

    const auto t_assemble = Clock::now();
    std::lock_guard<std::mutex> lock(pending->mutex_);
    AssembledBatch& batch = pending->batch_;
    if (config_.assembly == Assembly::kSlotOrder) {
      batch.samples[slot] = {index, std::move(payload)};
    } else {
      batch.samples.push_back({index, std::move(payload)});
    }
    batch.arrival_order.push_back(index);
    times.assemble_ns = ElapsedNs(t_assemble);
    batch.times += times;
  } catch (...) {
    pending->cancelled_.store(true);
    pending->Finish(std::make_exception_ptr(SampleFailure(
        pending->batch_.batch_ordinal, index, std::current_exception())));
    return;
  }
  pending->Finish(nullptr);
}

AssembledBatch FetchEngine::GenerateUnordered(const DatasetHandle& handle,
                                              const BatchSpec& batch,
                                              const PreprocessFn& preprocess) {
  return Submit(handle, batch, preprocess)->Wait();
}

AssembledBatch GenerateBatchUnordered(const DatasetHandle& handle,
                                      const BatchSpec& batch,
                                      const FetchConfig& config,
                                      const PreprocessFn& preprocess) {
  FetchEngine engine(config);
  return engine.GenerateUnordered(handle, batch, preprocess);
}

// --- EpochLoader -------------------------------------------------------------------------

EpochLoader::EpochLoader(std::shared_ptr<const DatasetHandle> handle,
                         std::vector<BatchSpec> batches,
                         const LoaderOptions& options, PreprocessFn preprocess,
                         std::shared_ptr<FetchEngine> engine)
    : handle_(std::move(handle)),
      batches_(std::move(batches)),
      options_(options),
      preprocess_(std::move(preprocess)) {
  if (!handle_) throw Error(ErrorCode::kInvalidArgument, "null dataset handle");
  options_.fetch.Validate();
  for (const BatchSpec& b : batches_) {
    for (const uint64_t index : b.indices) {
      if (index >= handle_->num_samples()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "plan index " + std::to_string(index) +
                        " outside dataset of " +
                        std::to_string(handle_->num_samples()) + " samples");
      }
    }
  }
  if (options_.generation == Generation::kUnordered) {
    engine_ = engine ? std::move(engine)
                     : std::make_shared<FetchEngine>(options_.fetch);
  }
}

EpochLoader::~EpochLoader() { Drain(); }

size_t EpochLoader::peak_in_flight_fetches() const {
  if (engine_) return engine_->peak_in_flight_fetches();
  return next_yield_ > 0 ? 1 : 0;
}

void EpochLoader::Launch() {
  while (in_flight_.size() < options_.fetch.prefetch_depth + 1 &&
         next_launch_ < batches_.size()) {
    in_flight_.push_back(
        engine_->Submit(*handle_, batches_[next_launch_++], preprocess_));
    peak_in_flight_batches_ =
        std::max(peak_in_flight_batches_, in_flight_.size());
  }
}

void EpochLoader::Drain() {
  for (auto& p : in_flight_) p->Cancel();
  for (auto& p : in_flight_) {
    try {
      p->Wait();
    } catch (...) {
    }
  }
  in_flight_.clear();
}

std::optional<AssembledBatch> EpochLoader::Next() {
  while (!terminated_ && next_yield_ < batches_.size()) {
    const BatchSpec& spec = batches_[next_yield_];
    try {
      AssembledBatch batch;
      if (options_.generation == Generation::kOrdered) {
        peak_in_flight_batches_ = std::max<size_t>(peak_in_flight_batches_, 1);
        batch = GenerateBatchOrdered(
            *handle_, spec, preprocess_,
            format::ReadOptions{options_.fetch.synthetic_read_latency});
      } else {
        Launch();
        std::shared_ptr<PendingBatch> pending = std::move(in_flight_.front());
        in_flight_.pop_front();
        batch = pending->Wait();
      }
      ++next_yield_;
      return batch;
    } catch (const Error& e) {
      ++next_yield_;
      if (options_.error_policy == ErrorPolicy::kSkipAndReport) {
        failures_.push_back({spec.batch_ordinal, e.sample(), e.what()});
        continue;
      }
      terminated_ = true;
      Drain();
      throw;
    }
  }
  return std::nullopt;
}

}  // namespace shufload::fetch
