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
#include "shufload/bench.hpp"

#include <barrier>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "shufload/error.hpp"

namespace shufload::bench {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(int64_t ns) { return static_cast<double>(ns) * 1e-9; }

int64_t ElapsedNs(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              since)
      .count();
}

class SyntheticSource {
 public:
  SyntheticSource(uint32_t dim, uint64_t seed, double noise)
      : rng_(sampler::Mix64(seed)), dim_(dim), noise_(noise), w_(dim) {
    for (double& v : w_) v = Uniform();
  }

  trainer::SyntheticSample Next() {
    trainer::SyntheticSample s;
    s.x.resize(dim_);
    double y = 0.0;
    for (uint32_t k = 0; k < dim_; ++k) {
      s.x[k] = Uniform();
      y += w_[k] * s.x[k];
    }
    s.y = y + noise_ * (rng_.NextDouble() - 0.5);
    return s;
  }

 private:
  double Uniform() { return 2.0 * rng_.NextDouble() - 1.0; }

  sampler::Xoshiro256 rng_;
  uint32_t dim_;
  double noise_;
  std::vector<double> w_;
};

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Walks consecutive epochs of one worker's shard, yielding batches forever.
class BatchStream {
 public:
  BatchStream(std::shared_ptr<const format::DatasetHandle> handle,
              const BenchConfig& config, const fetch::LoaderOptions& options,
              uint64_t worker)
      : handle_(std::move(handle)),
        config_(config),
        options_(options),
        worker_(worker) {
    if (options_.generation == fetch::Generation::kUnordered) {
      engine_ = std::make_shared<fetch::FetchEngine>(options_.fetch);
    }
  }

  fetch::AssembledBatch Next() {
    for (;;) {
      if (!loader_) {
        sampler::ShuffleSpec spec{config_.mode, config_.seed, epoch_,
                                  config_.buffer_size};
        auto plan = sampler::MakeEpochPlan(spec, handle_->num_samples(),
                                           config_.batch_size, true, worker_,
                                           config_.workers);
        loader_ = std::make_unique<fetch::EpochLoader>(
            handle_, plan.Batches(), options_, fetch::PreprocessFn{}, engine_);
      }
      if (auto batch = loader_->Next()) return std::move(*batch);
      last_peak_ = std::max(last_peak_, loader_->peak_in_flight_fetches());
      loader_.reset();
      ++epoch_;
    }
  }

  size_t peak_in_flight_fetches() const {
    size_t peak = last_peak_;
    if (loader_) peak = std::max(peak, loader_->peak_in_flight_fetches());
    return peak;
  }

 private:
  std::shared_ptr<const format::DatasetHandle> handle_;
  const BenchConfig& config_;
  fetch::LoaderOptions options_;
  uint64_t worker_;
  uint64_t epoch_ = 0;
  std::shared_ptr<fetch::FetchEngine> engine_;
  std::unique_ptr<fetch::EpochLoader> loader_;
  size_t last_peak_ = 0;
};

struct WorkerTotals {
  fetch::StageTimes stages;
  int64_t consume_ns = 0;
  Clock::time_point end;
  size_t peak_in_flight = 0;
};

uint64_t Consume(const fetch::AssembledBatch& batch,
                 std::chrono::microseconds compute) {
  uint64_t fold = 0;
  for (const auto& s : batch.samples) {
    fold += s.global_index;
    if (!s.payload.empty()) fold ^= s.payload.front();
  }
  if (compute.count() > 0) std::this_thread::sleep_for(compute);
  return fold;
}

MetricsRecord RunOnce(const BenchConfig& config, const std::string& variant,
                      std::chrono::microseconds compute, size_t concurrency,
                      uint64_t repeat) {
  format::OpenOptions open_options;
  open_options.cache_chunks = config.cache_chunks;
  open_options.drop_os_cache = config.drop_os_cache;
  auto handle = format::DatasetHandle::Open(config.dataset_path, open_options);

  fetch::LoaderOptions options;
  options.generation = config.generation;
  options.fetch.max_concurrent_fetches = concurrency;
  options.fetch.prefetch_depth = config.prefetch_depth;
  options.fetch.synthetic_read_latency = config.inject_latency;

  Clock::time_point start;
  uint64_t bytes_at_start = 0;
  auto on_measure_start = [&]() noexcept {
    bytes_at_start = handle->counters().bytes_read;
    start = Clock::now();
  };
  std::barrier sync(static_cast<std::ptrdiff_t>(config.workers),
                    on_measure_start);

  std::vector<WorkerTotals> totals(config.workers);
  std::vector<std::exception_ptr> errors(config.workers);
  auto work = [&](uint64_t w) {
    bool arrived = false;
    try {
      BatchStream stream(handle, config, options, w);
      uint64_t sink = 0;
      for (uint64_t i = 0; i < config.warmup_steps; ++i) {
        sink += Consume(stream.Next(), compute);
      }
      arrived = true;
      sync.arrive_and_wait();
      WorkerTotals& t = totals[w];
      for (uint64_t i = 0; i < config.steps; ++i) {
        fetch::AssembledBatch batch = stream.Next();
        t.stages += batch.times;
        const auto c = Clock::now();
        sink += Consume(batch, compute);
        t.consume_ns += ElapsedNs(c);
      }
      t.end = Clock::now();
      t.peak_in_flight = stream.peak_in_flight_fetches();
      if (sink == 0x5eed) std::this_thread::yield();  // keep `sink` live
    } catch (...) {
      errors[w] = std::current_exception();
      if (!arrived) sync.arrive_and_drop();
    }
  };
  if (config.workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (uint64_t w = 0; w < config.workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MetricsRecord r;
  r.variant = variant;
  r.mode = sampler::ShuffleModeName(config.mode);
  r.fetch = config.generation == fetch::Generation::kOrdered ? "ordered"
                                                             : "unordered";
  r.batch_size = config.batch_size;
  r.dataset_samples = handle->num_samples();
  r.concurrency =
      config.generation == fetch::Generation::kOrdered ? 1 : concurrency;
  r.prefetch_depth =
      config.generation == fetch::Generation::kOrdered ? 0
                                                       : config.prefetch_depth;
  r.inject_latency_us = static_cast<uint64_t>(config.inject_latency.count());
  r.compute_us = static_cast<uint64_t>(compute.count());
  r.workers = config.workers;
  r.cache_chunks = config.cache_chunks;
  r.repeat = std::to_string(repeat);
  r.steps = config.steps;
  r.samples = config.steps * config.batch_size * config.workers;
  Clock::time_point end = start;
  for (const WorkerTotals& t : totals) {
    end = std::max(end, t.end);
    r.index_lookup_s += Seconds(t.stages.index_lookup_ns);
    r.read_s += Seconds(t.stages.read_ns);
    r.decode_s += Seconds(t.stages.decode_ns);
    r.preprocess_s += Seconds(t.stages.preprocess_ns);
    r.assemble_s += Seconds(t.stages.assemble_ns);
    r.consume_s += Seconds(t.consume_ns);
    r.peak_in_flight_fetches =
        std::max<uint64_t>(r.peak_in_flight_fetches, t.peak_in_flight);
  }
  r.wall_time_s = std::chrono::duration<double>(end - start).count();
  r.samples_per_second =
      r.wall_time_s > 0 ? static_cast<double>(r.samples) / r.wall_time_s : 0;
  r.bytes_read = handle->counters().bytes_read - bytes_at_start;
  return r;
}

MetricsRecord Aggregate(const std::vector<MetricsRecord>& runs) {
  MetricsRecord mean = runs.front();
  mean.repeat = "mean";
  const double n = static_cast<double>(runs.size());
  auto avg = [&](double MetricsRecord::*field) {
    double sum = 0;
    for (const auto& r : runs) sum += r.*field;
    mean.*field = sum / n;
  };
  avg(&MetricsRecord::wall_time_s);
  avg(&MetricsRecord::samples_per_second);
  avg(&MetricsRecord::index_lookup_s);
  avg(&MetricsRecord::read_s);
  avg(&MetricsRecord::decode_s);
  avg(&MetricsRecord::preprocess_s);
  avg(&MetricsRecord::assemble_s);
  avg(&MetricsRecord::consume_s);
  double var = 0;
  uint64_t bytes = 0;
  for (const auto& r : runs) {
    const double d = r.samples_per_second - mean.samples_per_second;
    var += d * d;
    bytes += r.bytes_read;
    mean.peak_in_flight_fetches =
        std::max(mean.peak_in_flight_fetches, r.peak_in_flight_fetches);
  }
  mean.samples_per_second_stddev =
      runs.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  mean.bytes_read = bytes / runs.size();
  return mean;
}

bool SelectorMatches(const std::string& selector, const MetricsRecord& r) {
  return selector == r.fetch || selector == r.mode ||
         selector == r.mode + "/" + r.fetch;
}

std::string PairKey(const MetricsRecord& r) {
  return r.variant + "|" + std::to_string(r.batch_size) + "|" +
         std::to_string(r.dataset_samples) + "|" +
         std::to_string(r.inject_latency_us) + "|" +
         std::to_string(r.compute_us) + "|" + std::to_string(r.workers) + "|" +
         std::to_string(r.cache_chunks);
}

std::string DescribeKey(const MetricsRecord& r) {
  return r.variant + " batch=" + std::to_string(r.batch_size) +
         " samples=" + std::to_string(r.dataset_samples) +
         " latency_us=" + std::to_string(r.inject_latency_us) +
         " compute_us=" + std::to_string(r.compute_us) +
         " workers=" + std::to_string(r.workers) +
         " cache_chunks=" + std::to_string(r.cache_chunks);
}

}  // namespace

DatasetFormat ParseDatasetFormat(const std::string& name) {
  if (name == "stream") return DatasetFormat::kStream;
  if (name == "indexable") return DatasetFormat::kIndexable;
  throw Error(ErrorCode::kInvalidArgument, "unknown dataset format: " + name);
}

std::vector<trainer::SyntheticSample> MakeSyntheticSamples(uint64_t n,
                                                           uint32_t dim,
                                                           uint64_t seed,
                                                           double noise) {
  SyntheticSource source(dim, seed, noise);
  std::vector<trainer::SyntheticSample> out;
  out.reserve(n);
  for (uint64_t i = 0; i < n; ++i) out.push_back(source.Next());
  return out;
}

format::WriteStats GenerateDataset(const GenOptions& options,
                                   const std::string& path) {
  format::ChunkingOptions chunking;
  if (options.dim > 0) {
    const uint32_t bytes = trainer::SamplePayloadBytes(options.dim);
    chunking = format::ChunkingOptions::Fixed(
        bytes, options.samples_per_chunk ? options.samples_per_chunk
                                         : format::DefaultSamplesPerChunk(bytes));
  } else {
    if (options.sample_bytes == 0 && !options.variable_size) {
      throw Error(ErrorCode::kInvalidArgument, "sample_bytes must be >= 1");
    }
    const uint32_t spc = options.samples_per_chunk
                             ? options.samples_per_chunk
                             : format::DefaultSamplesPerChunk(
                                   std::max<uint32_t>(1, options.sample_bytes));
    chunking = options.variable_size
                   ? format::ChunkingOptions::LengthPrefixed(spc)
                   : format::ChunkingOptions::Fixed(options.sample_bytes, spc);
  }
  const auto layout = options.format == DatasetFormat::kStream
                          ? format::Layout::kStream
                          : format::Layout::kIndexable;
  format::FileSink sink(path);
  format::DatasetWriter writer(sink, layout, chunking);

  if (options.dim > 0) {
    if (options.sort_by_target) {
      auto samples = MakeSyntheticSamples(options.samples, options.dim,
                                          options.seed, options.noise);
      std::stable_sort(samples.begin(), samples.end(),
                       [](const auto& a, const auto& b) { return a.y < b.y; });
      for (const auto& s : samples) writer.Append(trainer::EncodeSample(s));
    } else {
      SyntheticSource source(options.dim, options.seed, options.noise);
      for (uint64_t i = 0; i < options.samples; ++i) {
        writer.Append(trainer::EncodeSample(source.Next()));
      }
    }
  } else {
    sampler::Xoshiro256 rng(sampler::Mix64(options.seed));
    format::Bytes payload;
    for (uint64_t i = 0; i < options.samples; ++i) {
      const uint64_t len = options.variable_size
                               ? rng.Below(uint64_t{options.sample_bytes} + 1)
                               : options.sample_bytes;
      payload.resize(len);
      for (uint64_t p = 0; p < len; p += 8) {
        uint64_t word = rng.Next();
        for (uint64_t b = p; b < std::min(len, p + 8); ++b) {
          payload[b] = static_cast<uint8_t>(word);
          word >>= 8;
        }
      }
      writer.Append(payload);
    }
  }
  writer.Finish();
  return writer.stats();
}

std::string DescribeConversion(const format::ConversionStats& stats) {
  std::ostringstream out;
  const auto& schema = stats.manifest.schema;
  out << "chunks: " << schema.total_chunks << "\n"
      << "samples: " << schema.total_samples << "\n"
      << "bytes written: " << stats.bytes_written << "\n"
      << "largest chunk payload: " << stats.largest_chunk_bytes << " bytes\n"
      << "peak chunk buffer: " << stats.peak_buffer_bytes << " bytes\n"
      << "chunk index in memory: " << stats.index_bytes << " bytes\n";
  return out.str();
}

// --- Verify -----------------------------------------------------------------------------

std::string VerifyReport::Text() const {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  out += ok ? "PASS\n" : "FAIL: " + failure + "\n";
  return out;
}

std::optional<std::string> FindSibling(const std::string& path) {
  std::filesystem::path p(path);
  std::filesystem::path other = p;
  if (p.extension() == ".shs") {
    other.replace_extension(".shi");
  } else if (p.extension() == ".shi") {
    other.replace_extension(".shs");
  } else {
    return std::nullopt;
  }
  std::error_code ec;
  if (std::filesystem::exists(other, ec)) return other.string();
  return std::nullopt;
}

VerifyReport VerifyDataset(const std::string& path,
                           const std::optional<std::string>& sibling) {
  VerifyReport report;
  auto& lines = report.lines;
  try {
    const format::SchemaDescriptor schema = format::ReadHeader(path);
    lines.push_back(
        std::string("header: version ") +
        std::to_string(schema.format_version) + ", " +
        (schema.layout == format::Layout::kIndexable ? "indexable" : "stream") +
        ", " +
        (schema.sample_encoding == format::SampleEncoding::kFixedSize
             ? "fixed_size(" + std::to_string(schema.fixed_sample_bytes) + ")"
             : std::string("length_prefixed")) +
        ", samples_per_chunk " + std::to_string(schema.samples_per_chunk));

    uint64_t chunks = 0;
    uint64_t samples = 0;
    if (schema.layout == format::Layout::kIndexable) {
      auto handle = format::DatasetHandle::Open(path);
      handle->manifest().Validate();
      lines.push_back("manifest audit: ok (" +
                      std::to_string(handle->num_chunks()) + " chunks, " +
                      std::to_string(handle->num_samples()) + " samples)");
      for (uint64_t k = 0; k < handle->num_chunks(); ++k) {
        const format::Bytes payload = handle->ReadChunkPayload(k);
        const auto& entry = handle->manifest().chunk_index[k];
        uint32_t count = 0;
        try {
          count = format::CountSamples(schema, payload);
        } catch (const Error& e) {
          Error err(ErrorCode::kCorrupt,
                    "chunk " + std::to_string(k) + ": " + e.what());
          err.WithChunk(k);
          throw err;
        }
        if (count != entry.sample_count) {
          Error err(ErrorCode::kCorrupt, "chunk " + std::to_string(k) +
                                             ": sample count disagrees");
          err.WithChunk(k);
          throw err;
        }
        ++chunks;
        samples += count;
      }
    }
    // Forward scan: the only check for stream files, and for indexable files
    // it confirms the chunk records agree with the footer.
    {
      format::StreamIterator it(path);
      format::RawChunk chunk;
      uint64_t scanned = 0;
      uint64_t scanned_samples = 0;
      while (it.NextChunk(chunk)) {
        ++scanned;
        scanned_samples += chunk.sample_count;
      }
      if (schema.layout == format::Layout::kIndexable &&
          (scanned != chunks || scanned_samples != samples)) {
        throw Error(ErrorCode::kCorrupt,
                    "forward scan disagrees with chunk index");
      }
      chunks = scanned;
      samples = scanned_samples;
    }
    lines.push_back("checksum scan: ok (" + std::to_string(chunks) +
                    " chunks, " + std::to_string(samples) + " samples)");

    if (sibling) {
      format::StreamIterator a(path);
      format::StreamIterator b(*sibling);
      uint64_t compared = 0;
      for (;;) {
        auto sa = a.Next();
        auto sb = b.Next();
        if (!sa && !sb) break;
        if (!sa || !sb || sa->payload != sb->payload) {
          Error err(ErrorCode::kVerification,
                    "sibling " + *sibling + " differs at sample " +
                        std::to_string(compared));
          err.WithSample(compared);
          throw err;
        }
        ++compared;
      }
      lines.push_back("sibling round trip: ok (" + std::to_string(compared) +
                      " samples match " + *sibling + ")");
    }
  } catch (const Error& e) {
    report.ok = false;
    report.failure = e.what();
    report.failing_chunk = e.chunk();
    report.failing_sample = e.sample();
  }
  return report;
}

// --- Bench --------------------------------------------------------------------------------

void BenchConfig::Validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, what);
  };
  if (dataset_path.empty()) bad("dataset path is required");
  if (batch_size < 1) bad("batch size must be >= 1");
  if (steps < 1) bad("steps must be >= 1");
  if (repeats < 1) bad("repeats must be >= 1");
  if (workers < 1) bad("workers must be >= 1");
  if (mode == sampler::ShuffleMode::kBuffered && buffer_size < 1) {
    bad("buffer size must be >= 1");
  }
  if (inject_latency.count() < 0 || simulated_compute.count() < 0) {
    bad("durations must be >= 0");
  }
}

std::vector<MetricsRecord> RunBench(const BenchConfig& config) {
  config.Validate();
  {
    auto probe = format::DatasetHandle::Open(config.dataset_path);
    const uint64_t per_worker = probe->num_samples() / config.workers;
    if (per_worker < config.batch_size) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dataset of " + std::to_string(probe->num_samples()) +
                      " samples cannot fill a batch of " +
                      std::to_string(config.batch_size) + " for each of " +
                      std::to_string(config.workers) + " workers");
    }
  }
  const size_t concurrency =
      config.concurrency ? config.concurrency
                         : fetch::FetchConfig::DefaultConcurrency(
                               config.batch_size);

  std::vector<std::pair<std::string, std::chrono::microseconds>> variants;
  if (config.simulated_compute.count() > 0) {
    variants.emplace_back("end_to_end", config.simulated_compute);
  }
  variants.emplace_back("loading_only", std::chrono::microseconds{0});

  std::vector<MetricsRecord> rows;
  for (const auto& [name, compute] : variants) {
    std::vector<MetricsRecord> runs;
    for (uint64_t r = 0; r < config.repeats; ++r) {
      runs.push_back(RunOnce(config, name, compute, concurrency, r));
    }
    rows.insert(rows.end(), runs.begin(), runs.end());
    rows.push_back(Aggregate(runs));
  }
  return rows;
}

// --- CSV / JSON ---------------------------------------------------------------------------

const std::vector<std::string>& CsvColumns() {
  static const std::vector<std::string> columns = {
      "variant",         "mode",
      "fetch",           "batch_size",
      "dataset_samples", "concurrency",
      "prefetch_depth",  "inject_latency_us",
      "compute_us",      "workers",
      "cache_chunks",    "repeat",
      "steps",           "samples",
      "wall_time_s",     "samples_per_second",
      "samples_per_second_stddev",
      "index_lookup_s",  "read_s",
      "decode_s",        "preprocess_s",
      "assemble_s",      "consume_s",
      "bytes_read",      "peak_in_flight_fetches"};
  return columns;
}

std::string CsvHeader() {
  std::string out;
  for (const auto& c : CsvColumns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string ToCsvRow(const MetricsRecord& r) {
  const std::vector<std::string> fields = {
      r.variant,
      r.mode,
      r.fetch,
      std::to_string(r.batch_size),
      std::to_string(r.dataset_samples),
      std::to_string(r.concurrency),
      std::to_string(r.prefetch_depth),
      std::to_string(r.inject_latency_us),
      std::to_string(r.compute_us),
      std::to_string(r.workers),
      std::to_string(r.cache_chunks),
      r.repeat,
      std::to_string(r.steps),
      std::to_string(r.samples),
      Fmt(r.wall_time_s),
      Fmt(r.samples_per_second),
      Fmt(r.samples_per_second_stddev),
      Fmt(r.index_lookup_s),
      Fmt(r.read_s),
      Fmt(r.decode_s),
      Fmt(r.preprocess_s),
      Fmt(r.assemble_s),
      Fmt(r.consume_s),
      std::to_string(r.bytes_read),
      std::to_string(r.peak_in_flight_fetches)};
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::string ToJsonLine(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["variant"] = r.variant;
  j["mode"] = r.mode;
  j["fetch"] = r.fetch;
  j["batch_size"] = r.batch_size;
  j["dataset_samples"] = r.dataset_samples;
  j["concurrency"] = r.concurrency;
  j["prefetch_depth"] = r.prefetch_depth;
  j["inject_latency_us"] = r.inject_latency_us;
  j["compute_us"] = r.compute_us;
  j["workers"] = r.workers;
  j["cache_chunks"] = r.cache_chunks;
  j["repeat"] = r.repeat;
  j["steps"] = r.steps;
  j["samples"] = r.samples;
  j["wall_time_s"] = r.wall_time_s;
  j["samples_per_second"] = r.samples_per_second;
  j["samples_per_second_stddev"] = r.samples_per_second_stddev;
  j["stages"] = {{"index_lookup_s", r.index_lookup_s},
                 {"read_s", r.read_s},
                 {"decode_s", r.decode_s},
                 {"preprocess_s", r.preprocess_s},
                 {"assemble_s", r.assemble_s},
                 {"consume_s", r.consume_s}};
  j["bytes_read"] = r.bytes_read;
  j["peak_in_flight_fetches"] = r.peak_in_flight_fetches;
  return j.dump();
}

void AppendCsv(const std::string& path,
               const std::vector<MetricsRecord>& records) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) ||
                     std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  if (fresh) out << CsvHeader() << "\n";
  for (const auto& r : records) out << ToCsvRow(r) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "write to " + path + " failed");
}

void AppendJsonLines(const std::string& path,
                     const std::vector<MetricsRecord>& records) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  for (const auto& r : records) out << ToJsonLine(r) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "write to " + path + " failed");
}

std::vector<MetricsRecord> ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != CsvHeader()) {
    throw Error(ErrorCode::kFormat, path + ": unexpected CSV header");
  }
  std::vector<MetricsRecord> out;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == CsvHeader()) continue;  // concatenated files
    const auto f = SplitCsvLine(line);
    if (f.size() != CsvColumns().size()) {
      throw Error(ErrorCode::kFormat, path + ":" + std::to_string(line_no) +
                                          ": wrong field count");
    }
    try {
      MetricsRecord r;
      size_t i = 0;
      auto u = [&]() { return std::stoull(f[i++]); };
      auto d = [&]() { return std::stod(f[i++]); };
      r.variant = f[i++];
      r.mode = f[i++];
      r.fetch = f[i++];
      r.batch_size = u();
      r.dataset_samples = u();
      r.concurrency = u();
      r.prefetch_depth = u();
      r.inject_latency_us = u();
      r.compute_us = u();
      r.workers = u();
      r.cache_chunks = u();
      r.repeat = f[i++];
      r.steps = u();
      r.samples = u();
      r.wall_time_s = d();
      r.samples_per_second = d();
      r.samples_per_second_stddev = d();
      r.index_lookup_s = d();
      r.read_s = d();
      r.decode_s = d();
      r.preprocess_s = d();
      r.assemble_s = d();
      r.consume_s = d();
      r.bytes_read = u();
      r.peak_in_flight_fetches = u();
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kFormat, path + ":" + std::to_string(line_no) +
                                          ": malformed number");
    }
  }
  return out;
}

// --- Compare ------------------------------------------------------------------------------

CompareResult CompareModes(const std::vector<MetricsRecord>& records,
                           const std::string& baseline,
                           const std::string& candidate) {
  std::map<std::string, const MetricsRecord*> base;
  std::map<std::string, const MetricsRecord*> cand;
  CompareResult result;
  for (const auto& r : records) {
    if (!r.is_aggregate()) continue;
    const std::string key = PairKey(r);
    for (auto [selector, table, label] :
         {std::tuple{&baseline, &base, "baseline"},
          std::tuple{&candidate, &cand, "candidate"}}) {
      if (!SelectorMatches(*selector, r)) continue;
      auto [it, inserted] = table->emplace(key, &r);
      if (!inserted && it->second != &r) {
        result.unmatched.push_back(std::string("ambiguous ") + label +
                                   " rows for " + DescribeKey(r));
      }
    }
  }
  for (const auto& [key, b] : base) {
    auto it = cand.find(key);
    if (it == cand.end()) {
      result.unmatched.push_back("no candidate row for " + DescribeKey(*b));
      continue;
    }
    const MetricsRecord* c = it->second;
    SpeedupRow row;
    row.variant = b->variant;
    row.batch_size = b->batch_size;
    row.dataset_samples = b->dataset_samples;
    row.inject_latency_us = b->inject_latency_us;
    row.compute_us = b->compute_us;
    row.workers = b->workers;
    row.cache_chunks = b->cache_chunks;
    row.baseline_sps = b->samples_per_second;
    row.candidate_sps = c->samples_per_second;
    row.speedup = b->samples_per_second > 0
                      ? c->samples_per_second / b->samples_per_second
                      : 0.0;
    result.rows.push_back(row);
  }
  for (const auto& [key, c] : cand) {
    if (!base.count(key)) {
      result.unmatched.push_back("no baseline row for " + DescribeKey(*c));
    }
  }
  return result;
}

std::string CompareResult::Table() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-13s %8s %10s %10s %10s %7s %7s %14s %14s %8s\n",
                "variant", "batch", "samples", "latency_us", "compute_us",
                "workers", "cache", "baseline_sps", "candidate_sps", "speedup");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%-13s %8llu %10llu %10llu %10llu %7llu %7llu %14.1f %14.1f "
                  "%7.2fx\n",
                  r.variant.c_str(),
                  static_cast<unsigned long long>(r.batch_size),
                  static_cast<unsigned long long>(r.dataset_samples),
                  static_cast<unsigned long long>(r.inject_latency_us),
                  static_cast<unsigned long long>(r.compute_us),
                  static_cast<unsigned long long>(r.workers),
                  static_cast<unsigned long long>(r.cache_chunks),
                  r.baseline_sps, r.candidate_sps, r.speedup);
    out += buf;
  }
  for (const auto& u : unmatched) out += "unmatched: " + u + "\n";
  return out;
}

std::string CompareResult::Csv() const {
  std::string out =
      "variant,batch_size,dataset_samples,inject_latency_us,compute_us,"
      "workers,cache_chunks,baseline_sps,candidate_sps,speedup\n";
  for (const auto& r : rows) {
    out += r.variant + "," + std::to_string(r.batch_size) + "," +
           std::to_string(r.dataset_samples) + "," +
           std::to_string(r.inject_latency_us) + "," +
           std::to_string(r.compute_us) + "," + std::to_string(r.workers) +
           "," + std::to_string(r.cache_chunks) + "," + Fmt(r.baseline_sps) +
           "," + Fmt(r.candidate_sps) + "," + Fmt(r.speedup) + "\n";
  }
  return out;
}

}  // namespace shufload::bench
