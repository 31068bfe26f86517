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
#include "shufload/shufload.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "shufload/bench.hpp"
#include "shufload/error.hpp"
#include "shufload/fetch.hpp"
#include "shufload/format.hpp"
#include "shufload/sampler.hpp"
#include "shufload/trainer.hpp"

using shufload::Error;
using shufload::ErrorCode;
namespace format = shufload::format;
namespace sampler = shufload::sampler;
namespace fetch = shufload::fetch;
namespace trainer = shufload::trainer;
namespace bench = shufload::bench;

struct sl_text {
  std::string value;
};

struct sl_writer {
  std::unique_ptr<format::FileSink> sink;
  std::unique_ptr<format::DatasetWriter> writer;
};

struct sl_dataset {
  std::shared_ptr<format::DatasetHandle> handle;
};

struct sl_loader {
  std::unique_ptr<fetch::EpochLoader> loader;
};

struct sl_batch {
  fetch::AssembledBatch batch;
};

struct sl_train_result {
  trainer::TrainResult result;
};

namespace {

struct LastError {
  std::string message;
  std::optional<uint64_t> chunk;
  std::optional<uint64_t> sample;
};

thread_local LastError last_error;

int StatusOf(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return SL_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo:
      return SL_ERR_IO;
    case ErrorCode::kAbortedFile:
      return SL_ERR_ABORTED_FILE;
    case ErrorCode::kCorrupt:
      return SL_ERR_CORRUPT;
    case ErrorCode::kFormat:
      return SL_ERR_FORMAT;
    case ErrorCode::kUnsupportedVersion:
      return SL_ERR_UNSUPPORTED_VERSION;
    case ErrorCode::kIndex:
      return SL_ERR_INDEX;
    case ErrorCode::kNumeric:
      return SL_ERR_NUMERIC;
    case ErrorCode::kVerification:
      return SL_ERR_VERIFICATION;
    case ErrorCode::kCancelled:
      return SL_ERR_INTERNAL;
  }
  return SL_ERR_INTERNAL;
}

int Fail(int status, std::string message) {
  last_error = {std::move(message), std::nullopt, std::nullopt};
  return status;
}

// Runs `body` (returning an sl_status) and converts exceptions to statuses.
template <typename Body>
int Guard(Body&& body) noexcept {
  try {
    const int status = body();
    if (status == SL_OK || status == SL_END) last_error = {};
    return status;
  } catch (const Error& e) {
    last_error = {e.what(), e.chunk(), e.sample()};
    return StatusOf(e.code());
  } catch (const std::bad_alloc&) {
    return Fail(SL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(SL_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(SL_ERR_INTERNAL, "unknown failure");
  }
}

#define SL_REQUIRE(cond)                                           \
  do {                                                             \
    if (!(cond)) {                                                 \
      return Fail(SL_ERR_INVALID_ARGUMENT, "invalid argument: " #cond); \
    }                                                              \
  } while (0)

sampler::ShuffleSpec ToSpec(const sl_shuffle_spec& s) {
  sampler::ShuffleSpec spec;
  switch (s.mode) {
    case SL_SHUFFLE_SEQUENTIAL:
      spec.mode = sampler::ShuffleMode::kSequential;
      break;
    case SL_SHUFFLE_INDICES_MAPPING:
      spec.mode = sampler::ShuffleMode::kIndicesMapping;
      break;
    case SL_SHUFFLE_BUFFERED:
      spec.mode = sampler::ShuffleMode::kBuffered;
      break;
    default:
      throw Error(ErrorCode::kInvalidArgument, "unknown shuffle mode");
  }
  spec.seed = s.seed;
  spec.epoch = s.epoch;
  spec.buffer_size = s.buffer_size;
  return spec;
}

fetch::Generation ToGeneration(sl_generation g) {
  return g == SL_FETCH_ORDERED ? fetch::Generation::kOrdered
                               : fetch::Generation::kUnordered;
}

sl_text* NewText(std::string s) { return new sl_text{std::move(s)}; }

}  // namespace

extern "C" {

const char* sl_version(void) { return "0.1.0"; }

const char* sl_status_name(int status) {
  switch (status) {
    case SL_OK:
      return "ok";
    case SL_END:
      return "end";
    case SL_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case SL_ERR_IO:
      return "i/o error";
    case SL_ERR_ABORTED_FILE:
      return "aborted file";
    case SL_ERR_CORRUPT:
      return "corrupt data";
    case SL_ERR_FORMAT:
      return "format error";
    case SL_ERR_UNSUPPORTED_VERSION:
      return "unsupported version";
    case SL_ERR_INDEX:
      return "index out of range";
    case SL_ERR_NUMERIC:
      return "numeric error";
    case SL_ERR_VERIFICATION:
      return "verification failure";
    case SL_ERR_BUFFER_TOO_SMALL:
      return "buffer too small";
    default:
      return "internal error";
  }
}

const char* sl_last_error(void) { return last_error.message.c_str(); }

int sl_last_error_chunk(uint64_t* chunk_ordinal) {
  if (chunk_ordinal == nullptr || !last_error.chunk) return SL_ERR_INVALID_ARGUMENT;
  *chunk_ordinal = *last_error.chunk;
  return SL_OK;
}

int sl_last_error_sample(uint64_t* global_index) {
  if (global_index == nullptr || !last_error.sample) return SL_ERR_INVALID_ARGUMENT;
  *global_index = *last_error.sample;
  return SL_OK;
}

const char* sl_text_data(const sl_text* text) {
  return text ? text->value.c_str() : "";
}

size_t sl_text_size(const sl_text* text) { return text ? text->value.size() : 0; }

void sl_text_free(sl_text* text) { delete text; }

// --- Writing ------------------------------------------------------------------------------

int sl_writer_create(const char* path, sl_layout layout, sl_encoding encoding,
                     uint32_t fixed_sample_bytes, uint32_t samples_per_chunk,
                     sl_writer** out) {
  return Guard([&]() -> int {
    SL_REQUIRE(path != nullptr && out != nullptr);
    SL_REQUIRE(layout == SL_LAYOUT_STREAM || layout == SL_LAYOUT_INDEXABLE);
    SL_REQUIRE(encoding == SL_ENCODING_FIXED_SIZE ||
               encoding == SL_ENCODING_LENGTH_PREFIXED);
    const auto chunking =
        encoding == SL_ENCODING_FIXED_SIZE
            ? format::ChunkingOptions::Fixed(fixed_sample_bytes,
                                             samples_per_chunk)
            : format::ChunkingOptions::LengthPrefixed(samples_per_chunk);
    auto w = std::make_unique<sl_writer>();
    w->sink = std::make_unique<format::FileSink>(path);
    w->writer = std::make_unique<format::DatasetWriter>(
        *w->sink,
        layout == SL_LAYOUT_STREAM ? format::Layout::kStream
                                   : format::Layout::kIndexable,
        chunking);
    *out = w.release();
    return SL_OK;
  });
}

int sl_writer_append(sl_writer* writer, const uint8_t* data, size_t length) {
  return Guard([&]() -> int {
    SL_REQUIRE(writer != nullptr && (data != nullptr || length == 0));
    writer->writer->Append(format::ByteView(data, length));
    return SL_OK;
  });
}

int sl_writer_finish(sl_writer* writer, sl_write_stats* stats) {
  return Guard([&]() -> int {
    SL_REQUIRE(writer != nullptr);
    writer->writer->Finish();
    if (stats != nullptr) {
      const auto& s = writer->writer->stats();
      *stats = {s.samples_written, s.chunks_written, s.bytes_written};
    }
    return SL_OK;
  });
}

void sl_writer_destroy(sl_writer* writer) { delete writer; }

int sl_convert(const char* source, const char* destination,
               sl_convert_stats* stats) {
  return Guard([&]() -> int {
    SL_REQUIRE(source != nullptr && destination != nullptr);
    const auto s = format::ConvertStreamToIndexable(source, destination);
    if (stats != nullptr) {
      *stats = {s.manifest.schema.total_chunks, s.manifest.schema.total_samples,
                s.bytes_written,                s.largest_chunk_bytes,
                s.peak_buffer_bytes,            s.index_bytes};
    }
    return SL_OK;
  });
}

int sl_convert_describe(const sl_convert_stats* stats, sl_text** out) {
  return Guard([&]() -> int {
    SL_REQUIRE(stats != nullptr && out != nullptr);
    format::ConversionStats s;
    s.manifest.schema.total_chunks = stats->chunks;
    s.manifest.schema.total_samples = stats->samples;
    s.bytes_written = stats->bytes_written;
    s.largest_chunk_bytes = stats->largest_chunk_bytes;
    s.peak_buffer_bytes = stats->peak_buffer_bytes;
    s.index_bytes = stats->index_bytes;
    *out = NewText(bench::DescribeConversion(s));
    return SL_OK;
  });
}

// --- Random access ------------------------------------------------------------------------

int sl_dataset_open(const char* path, const sl_open_options* options,
                    sl_dataset** out) {
  return Guard([&]() -> int {
    SL_REQUIRE(path != nullptr && out != nullptr);
    format::OpenOptions open;
    if (options != nullptr) {
      open.cache_chunks = options->cache_chunks;
      open.drop_os_cache = options->drop_os_cache != 0;
    }
    *out = new sl_dataset{format::DatasetHandle::Open(path, open)};
    return SL_OK;
  });
}

void sl_dataset_close(sl_dataset* dataset) { delete dataset; }

int sl_dataset_get_info(const sl_dataset* dataset, sl_dataset_info* out) {
  return Guard([&]() -> int {
    SL_REQUIRE(dataset != nullptr && out != nullptr);
    const auto& s = dataset->handle->schema();
    out->format_version = s.format_version;
    out->encoding = s.sample_encoding == format::SampleEncoding::kFixedSize
                        ? SL_ENCODING_FIXED_SIZE
                        : SL_ENCODING_LENGTH_PREFIXED;
    out->fixed_sample_bytes = s.fixed_sample_bytes;
    out->samples_per_chunk = s.samples_per_chunk;
    out->total_samples = s.total_samples;
    out->total_chunks = s.total_chunks;
    out->open_bytes_read = dataset->handle->open_bytes_read();
    return SL_OK;
  });
}

int sl_dataset_get_chunk_info(const sl_dataset* dataset,
                              uint64_t chunk_ordinal, sl_chunk_info* out) {
  return Guard([&]() -> int {
    SL_REQUIRE(dataset != nullptr && out != nullptr);
    const auto& index = dataset->handle->manifest().chunk_index;
    if (chunk_ordinal >= index.size()) {
      return Fail(SL_ERR_INDEX, "chunk ordinal out of range");
    }
    const auto& e = index[chunk_ordinal];
    *out = {e.chunk_ordinal,      e.byte_offset, e.byte_length,
            e.sample_count,       e.first_global_index, e.checksum};
    return SL_OK;
  });
}

int sl_dataset_get_sample(const sl_dataset* dataset, uint64_t global_index,
                          uint8_t* buffer, size_t capacity, size_t* length) {
  return Guard([&]() -> int {
    SL_REQUIRE(dataset != nullptr && length != nullptr);
    const auto record = dataset->handle->GetSample(global_index);
    *length = record.payload.size();
    if (capacity < record.payload.size() || (buffer == nullptr && *length)) {
      return Fail(SL_ERR_BUFFER_TOO_SMALL,
                  "sample needs " + std::to_string(*length) + " bytes");
    }
    if (*length) std::memcpy(buffer, record.payload.data(), *length);
    return SL_OK;
  });
}

int sl_dataset_get_counters(const sl_dataset* dataset, sl_io_counters* out) {
  return Guard([&]() -> int {
    SL_REQUIRE(dataset != nullptr && out != nullptr);
    const auto c = dataset->handle->counters();
    *out = {c.bytes_read, c.chunk_reads, c.cache_hits};
    return SL_OK;
  });
}

// --- Index orders -----------------------------------------------------------------------------

int sl_epoch_order(const sl_shuffle_spec* spec, uint64_t n, uint64_t* out) {
  return Guard([&]() -> int {
    SL_REQUIRE(spec != nullptr && (out != nullptr || n == 0));
    const auto order = sampler::EpochOrder(ToSpec(*spec), n);
    std::copy(order.begin(), order.end(), out);
    return SL_OK;
  });
}

int sl_shard_for_worker(const uint64_t* order, uint64_t n, uint64_t worker_id,
                        uint64_t world_size, uint64_t* out,
                        uint64_t* out_length) {
  return Guard([&]() -> int {
    SL_REQUIRE((order != nullptr || n == 0) && out_length != nullptr);
    const auto shard = sampler::ShardForWorker(
        std::span<const uint64_t>(order, n), worker_id, world_size);
    SL_REQUIRE(out != nullptr || shard.empty());
    std::copy(shard.begin(), shard.end(), out);
    *out_length = shard.size();
    return SL_OK;
  });
}

// --- Loading -------------------------------------------------------------------------------------

void sl_loader_options_init(sl_loader_options* o) {
  if (o == nullptr) return;
  *o = sl_loader_options{};
  o->shuffle.mode = SL_SHUFFLE_INDICES_MAPPING;
  o->shuffle.buffer_size = 1;
  o->batch_size = 32;
  o->world_size = 1;
  o->generation = SL_FETCH_UNORDERED;
  o->prefetch_depth = 1;
  o->assembly = SL_ASSEMBLY_ARRIVAL_ORDER;
}

int sl_loader_create(sl_dataset* dataset, const sl_loader_options* o,
                     sl_loader** out) {
  return Guard([&]() -> int {
    SL_REQUIRE(dataset != nullptr && o != nullptr && out != nullptr);
    SL_REQUIRE(o->batch_size >= 1);
    const auto plan = sampler::MakeEpochPlan(
        ToSpec(o->shuffle), dataset->handle->num_samples(), o->batch_size,
        o->drop_last != 0, o->worker_id, o->world_size);
    fetch::LoaderOptions options;
    options.generation = ToGeneration(o->generation);
    options.error_policy = o->skip_failed_batches
                               ? fetch::ErrorPolicy::kSkipAndReport
                               : fetch::ErrorPolicy::kFailFast;
    options.fetch.max_concurrent_fetches =
        o->max_concurrent_fetches
            ? o->max_concurrent_fetches
            : fetch::FetchConfig::DefaultConcurrency(o->batch_size);
    options.fetch.prefetch_depth = o->prefetch_depth;
    options.fetch.assembly = o->assembly == SL_ASSEMBLY_SLOT_ORDER
                                 ? fetch::Assembly::kSlotOrder
                                 : fetch::Assembly::kArrivalOrder;
    options.fetch.synthetic_read_latency =
        std::chrono::microseconds(o->synthetic_read_latency_us);
    fetch::PreprocessFn preprocess;
    if (o->preprocess != nullptr) {
      preprocess = [fn = o->preprocess, user = o->preprocess_user](
                       uint64_t index, format::Bytes payload) {
        const int rc = fn(user, index, payload.data(), payload.size());
        if (rc != 0) {
          throw Error(ErrorCode::kInvalidArgument,
                      "preprocess callback returned " + std::to_string(rc));
        }
        return payload;
      };
    }
    auto loader = std::make_unique<sl_loader>();
    loader->loader = std::make_unique<fetch::EpochLoader>(
        dataset->handle, plan.Batches(), options, std::move(preprocess));
    *out = loader.release();
    return SL_OK;
  });
}

int sl_loader_next(sl_loader* loader, sl_batch** out) {
  return Guard([&]() -> int {
    SL_REQUIRE(loader != nullptr && out != nullptr);
    auto batch = loader->loader->Next();
    if (!batch) {
      *out = nullptr;
      return static_cast<int>(SL_END);
    }
    *out = new sl_batch{std::move(*batch)};
    return static_cast<int>(SL_OK);
  });
}

uint64_t sl_loader_failed_batches(const sl_loader* loader) {
  return loader ? loader->loader->failures().size() : 0;
}

void sl_loader_destroy(sl_loader* loader) { delete loader; }

uint64_t sl_batch_ordinal(const sl_batch* batch) {
  return batch ? batch->batch.batch_ordinal : 0;
}

size_t sl_batch_size(const sl_batch* batch) {
  return batch ? batch->batch.samples.size() : 0;
}

int sl_batch_sample(const sl_batch* batch, size_t k, uint64_t* global_index,
                    const uint8_t** data, size_t* length) {
  if (batch == nullptr || k >= batch->batch.samples.size()) {
    return Fail(SL_ERR_INDEX, "batch slot out of range");
  }
  const auto& s = batch->batch.samples[k];
  if (global_index) *global_index = s.global_index;
  if (data) *data = s.payload.data();
  if (length) *length = s.payload.size();
  return SL_OK;
}

int sl_batch_requested(const sl_batch* batch, size_t k,
                       uint64_t* global_index) {
  if (batch == nullptr || global_index == nullptr ||
      k >= batch->batch.requested.size()) {
    return Fail(SL_ERR_INDEX, "batch slot out of range");
  }
  *global_index = batch->batch.requested[k];
  return SL_OK;
}

int sl_batch_arrival(const sl_batch* batch, size_t k, uint64_t* global_index) {
  if (batch == nullptr || global_index == nullptr ||
      k >= batch->batch.arrival_order.size()) {
    return Fail(SL_ERR_INDEX, "batch slot out of range");
  }
  *global_index = batch->batch.arrival_order[k];
  return SL_OK;
}

void sl_batch_free(sl_batch* batch) { delete batch; }

// --- Training ----------------------------------------------------------------------------------------

void sl_train_options_init(sl_train_options* o) {
  if (o == nullptr) return;
  *o = sl_train_options{};
  o->shuffle.mode = SL_SHUFFLE_INDICES_MAPPING;
  o->shuffle.buffer_size = 1;
  o->batch_size = 32;
  o->epochs = 1;
  o->eta = 0.05;
  o->dim = 8;
  o->generation = SL_FETCH_UNORDERED;
  o->prefetch_depth = 1;
}

int sl_train(sl_dataset* dataset, const sl_train_options* o,
             const double* theta0, sl_train_result** out) {
  return Guard([&]() -> int {
    SL_REQUIRE(dataset != nullptr && o != nullptr && out != nullptr);
    SL_REQUIRE(o->dim >= 1 && o->batch_size >= 1);
    trainer::ModelState initial;
    initial.eta = o->eta;
    initial.theta.assign(o->dim, 0.0);
    if (theta0 != nullptr) initial.theta.assign(theta0, theta0 + o->dim);
    trainer::TrainOptions options;
    options.shuffle = ToSpec(o->shuffle);
    options.batch_size = o->batch_size;
    options.drop_last = o->drop_last != 0;
    options.epochs = o->epochs;
    options.loader.generation = ToGeneration(o->generation);
    options.loader.fetch.max_concurrent_fetches =
        o->max_concurrent_fetches
            ? o->max_concurrent_fetches
            : fetch::FetchConfig::DefaultConcurrency(o->batch_size);
    options.loader.fetch.prefetch_depth = o->prefetch_depth;
    *out = new sl_train_result{
        trainer::TrainEpochs(dataset->handle, initial, options)};
    return SL_OK;
  });
}

size_t sl_train_result_dim(const sl_train_result* r) {
  return r ? r->result.state.theta.size() : 0;
}

const double* sl_train_result_theta(const sl_train_result* r) {
  return r ? r->result.state.theta.data() : nullptr;
}

size_t sl_train_result_steps(const sl_train_result* r) {
  return r ? r->result.loss_trace.size() : 0;
}

const double* sl_train_result_losses(const sl_train_result* r) {
  return r ? r->result.loss_trace.data() : nullptr;
}

void sl_train_result_free(sl_train_result* r) { delete r; }

// --- Harness --------------------------------------------------------------------------------------------

void sl_gen_options_init(sl_gen_options* o) {
  if (o == nullptr) return;
  *o = sl_gen_options{};
  o->sample_bytes = 1024;
  o->noise = 0.01;
  o->layout = SL_LAYOUT_INDEXABLE;
}

int sl_generate(const char* path, const sl_gen_options* o,
                sl_write_stats* stats) {
  return Guard([&]() -> int {
    SL_REQUIRE(path != nullptr && o != nullptr);
    bench::GenOptions g;
    g.samples = o->samples;
    g.sample_bytes = o->sample_bytes;
    g.variable_size = o->variable_size != 0;
    g.dim = o->dim;
    g.noise = o->noise;
    g.sort_by_target = o->sort_by_target != 0;
    g.samples_per_chunk = o->samples_per_chunk;
    g.seed = o->seed;
    g.format = o->layout == SL_LAYOUT_STREAM ? bench::DatasetFormat::kStream
                                             : bench::DatasetFormat::kIndexable;
    const auto s = bench::GenerateDataset(g, path);
    if (stats != nullptr) {
      *stats = {s.samples_written, s.chunks_written, s.bytes_written};
    }
    return SL_OK;
  });
}

int sl_verify(const char* path, const char* sibling, int auto_sibling,
              sl_text** report) {
  return Guard([&]() -> int {
    SL_REQUIRE(path != nullptr);
    std::optional<std::string> other;
    if (sibling != nullptr && *sibling != '\0') {
      other = sibling;
    } else if (auto_sibling) {
      other = bench::FindSibling(path);
    }
    const auto r = bench::VerifyDataset(path, other);
    if (report != nullptr) *report = NewText(r.Text());
    if (r.ok) return static_cast<int>(SL_OK);
    last_error = {r.failure, r.failing_chunk, r.failing_sample};
    return static_cast<int>(SL_ERR_VERIFICATION);
  });
}

void sl_bench_options_init(sl_bench_options* o) {
  if (o == nullptr) return;
  *o = sl_bench_options{};
  o->mode = SL_SHUFFLE_INDICES_MAPPING;
  o->buffer_size = 1024;
  o->generation = SL_FETCH_UNORDERED;
  o->batch_size = 32;
  o->steps = 300;
  o->warmup_steps = 20;
  o->repeats = 3;
  o->prefetch_depth = 1;
  o->workers = 1;
}

int sl_bench(const sl_bench_options* o, const char* csv_path,
             const char* json_path, sl_text** rows) {
  return Guard([&]() -> int {
    SL_REQUIRE(o != nullptr && o->dataset_path != nullptr);
    bench::BenchConfig c;
    c.dataset_path = o->dataset_path;
    c.mode = ToSpec({o->mode, 0, 0, 1}).mode;
    c.buffer_size = o->buffer_size;
    c.seed = o->seed;
    c.generation = ToGeneration(o->generation);
    c.batch_size = o->batch_size;
    c.steps = o->steps;
    c.warmup_steps = o->warmup_steps;
    c.repeats = o->repeats;
    c.concurrency = o->concurrency;
    c.prefetch_depth = o->prefetch_depth;
    c.inject_latency = std::chrono::microseconds(o->inject_latency_us);
    c.simulated_compute = std::chrono::microseconds(o->compute_us);
    c.workers = o->workers;
    c.cache_chunks = o->cache_chunks;
    c.drop_os_cache = o->drop_os_cache != 0;
    const auto records = bench::RunBench(c);
    if (csv_path != nullptr) bench::AppendCsv(csv_path, records);
    if (json_path != nullptr) bench::AppendJsonLines(json_path, records);
    if (rows != nullptr) {
      std::string text = bench::CsvHeader() + "\n";
      for (const auto& r : records) text += bench::ToCsvRow(r) + "\n";
      *rows = NewText(std::move(text));
    }
    return SL_OK;
  });
}

int sl_compare(const char* csv_path, const char* baseline,
               const char* candidate, const char* out_csv, sl_text** table) {
  return Guard([&]() -> int {
    SL_REQUIRE(csv_path != nullptr && baseline != nullptr &&
               candidate != nullptr);
    const auto result =
        bench::CompareModes(bench::ReadCsv(csv_path), baseline, candidate);
    if (table != nullptr) *table = NewText(result.Table());
    if (out_csv != nullptr) {
      std::ofstream out(out_csv);
      out << result.Csv();
      if (!out) return Fail(SL_ERR_IO, std::string("cannot write ") + out_csv);
    }
    if (result.rows.empty() && result.unmatched.empty()) {
      return Fail(SL_ERR_INVALID_ARGUMENT,
                  "no aggregate rows match the selectors");
    }
    if (!result.unmatched.empty()) {
      return Fail(SL_ERR_INVALID_ARGUMENT,
                  std::to_string(result.unmatched.size()) +
                      " configuration(s) could not be paired");
    }
    return static_cast<int>(SL_OK);
  });
}

}  // extern "C"
