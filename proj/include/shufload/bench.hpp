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
// Dataset synthesis, verification and the loading benchmark behind the CLI.
//
// Benchmark rows go to a CSV whose columns are fixed (see CsvColumns()); the
// compare step reads the same file back. One BenchConfig produces, for each
// variant, one row per repeat plus a "mean" aggregate row. The loading_only
// variant is always measured; end_to_end only when simulated compute > 0.
#ifndef SHUFLOAD_BENCH_HPP_
#define SHUFLOAD_BENCH_HPP_

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shufload/fetch.hpp"
#include "shufload/format.hpp"
#include "shufload/sampler.hpp"
#include "shufload/trainer.hpp"

namespace shufload::bench {

enum class DatasetFormat { kStream, kIndexable };

DatasetFormat ParseDatasetFormat(const std::string& name);

struct GenOptions {
  uint64_t samples = 0;
  // Opaque payloads of this many bytes (upper bound when variable_size).
  uint32_t sample_bytes = 1024;
  bool variable_size = false;
  // When dim > 0, payloads are decodable SyntheticSamples of this dimension
  // and sample_bytes is ignored.
  uint32_t dim = 0;
  double noise = 0.01;
  bool sort_by_target = false;
  uint32_t samples_per_chunk = 0;  // 0: DefaultSamplesPerChunk
  uint64_t seed = 0;
  DatasetFormat format = DatasetFormat::kIndexable;
};

// y = w . x + noise * (u - 1/2) with w, x uniform in [-1, 1].
std::vector<trainer::SyntheticSample> MakeSyntheticSamples(uint64_t n,
                                                           uint32_t dim,
                                                           uint64_t seed,
                                                           double noise);

format::WriteStats GenerateDataset(const GenOptions& options,
                                   const std::string& path);

std::string DescribeConversion(const format::ConversionStats& stats);

struct VerifyReport {
  bool ok = true;
  std::string failure;  // first failure, empty when ok
  std::optional<uint64_t> failing_chunk;
  std::optional<uint64_t> failing_sample;
  std::vector<std::string> lines;

  std::string Text() const;
};

// ".shs" <-> ".shi" sibling of `path`, if that file exists.
std::optional<std::string> FindSibling(const std::string& path);

VerifyReport VerifyDataset(const std::string& path,
                           const std::optional<std::string>& sibling);

struct BenchConfig {
  std::string dataset_path;
  sampler::ShuffleMode mode = sampler::ShuffleMode::kIndicesMapping;
  uint64_t buffer_size = 1024;
  uint64_t seed = 0;
  fetch::Generation generation = fetch::Generation::kUnordered;
  uint64_t batch_size = 32;
  uint64_t steps = 300;
  uint64_t warmup_steps = 20;
  uint64_t repeats = 3;
  size_t concurrency = 0;  // 0: FetchConfig::DefaultConcurrency(batch_size)
  size_t prefetch_depth = 1;
  std::chrono::microseconds inject_latency{0};
  std::chrono::microseconds simulated_compute{0};
  uint64_t workers = 1;
  // Cache-defeating profile: a bounded chunk cache stands in for a page
  // cache far smaller than the dataset, and OS caching is dropped at open.
  size_t cache_chunks = 0;
  bool drop_os_cache = false;

  void Validate() const;
};

struct MetricsRecord {
  std::string variant;  // loading_only | end_to_end
  std::string mode;
  std::string fetch;  // ordered | unordered
  uint64_t batch_size = 0;
  uint64_t dataset_samples = 0;
  uint64_t concurrency = 0;
  uint64_t prefetch_depth = 0;
  uint64_t inject_latency_us = 0;
  uint64_t compute_us = 0;
  uint64_t workers = 1;
  uint64_t cache_chunks = 0;
  std::string repeat;  // 0-based repeat number, or "mean"
  uint64_t steps = 0;
  uint64_t samples = 0;
  double wall_time_s = 0;
  double samples_per_second = 0;
  double samples_per_second_stddev = 0;
  double index_lookup_s = 0;
  double read_s = 0;
  double decode_s = 0;
  double preprocess_s = 0;
  double assemble_s = 0;
  double consume_s = 0;
  uint64_t bytes_read = 0;
  uint64_t peak_in_flight_fetches = 0;

  bool is_aggregate() const { return repeat == "mean"; }
  double stage_total_s() const {
    return index_lookup_s + read_s + decode_s + preprocess_s + assemble_s +
           consume_s;
  }
};

std::vector<MetricsRecord> RunBench(const BenchConfig& config);

const std::vector<std::string>& CsvColumns();
std::string CsvHeader();
std::string ToCsvRow(const MetricsRecord& record);
std::string ToJsonLine(const MetricsRecord& record);
// Appends rows; writes the header first when the file is new or empty.
void AppendCsv(const std::string& path,
               const std::vector<MetricsRecord>& records);
void AppendJsonLines(const std::string& path,
                     const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> ReadCsv(const std::string& path);

struct SpeedupRow {
  std::string variant;
  uint64_t batch_size = 0;
  uint64_t dataset_samples = 0;
  uint64_t inject_latency_us = 0;
  uint64_t compute_us = 0;
  uint64_t workers = 0;
  uint64_t cache_chunks = 0;
  double baseline_sps = 0;
  double candidate_sps = 0;
  double speedup = 0;
};

struct CompareResult {
  std::vector<SpeedupRow> rows;
  std::vector<std::string> unmatched;

  std::string Table() const;
  std::string Csv() const;
};

// A selector matches a row's fetch column ("ordered"), its mode column
// ("indices-mapping") or "mode/fetch". Only aggregate rows take part; rows
// pair up on (variant, batch size, dataset size, latency, compute, workers,
// cache). speedup = candidate / baseline samples_per_second.
CompareResult CompareModes(const std::vector<MetricsRecord>& records,
                           const std::string& baseline,
                           const std::string& candidate);

}  // namespace shufload::bench

#endif  // SHUFLOAD_BENCH_HPP_
