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
/* C interface to shufload.
 *
 * Objects are opaque handles created by sl_*_create / sl_*_open and released
 * by the matching destroy/close/free call. Every fallible call returns an
 * int status: SL_OK (0) on success, SL_END (1) when an iterator is exhausted,
 * or a negative sl_status. After a failure, sl_last_error() returns a message
 * for the calling thread and sl_last_error_chunk / sl_last_error_sample
 * report the failing location when one is known.
 *
 * A sl_dataset may be shared by concurrent readers. A sl_loader is driven by
 * one thread at a time. Batches stay valid after the loader is destroyed.
 */
#ifndef SHUFLOAD_SHUFLOAD_H_
#define SHUFLOAD_SHUFLOAD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SHUFLOAD_BUILDING_LIBRARY)
#define SL_API __attribute__((visibility("default")))
#else
#define SL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sl_status {
  SL_OK = 0,
  SL_END = 1,
  SL_ERR_INVALID_ARGUMENT = -1,
  SL_ERR_IO = -2,
  SL_ERR_ABORTED_FILE = -3,
  SL_ERR_CORRUPT = -4,
  SL_ERR_FORMAT = -5,
  SL_ERR_UNSUPPORTED_VERSION = -6,
  SL_ERR_INDEX = -7,
  SL_ERR_NUMERIC = -8,
  SL_ERR_VERIFICATION = -9,
  SL_ERR_BUFFER_TOO_SMALL = -10,
  SL_ERR_INTERNAL = -11
} sl_status;

SL_API const char* sl_version(void);
SL_API const char* sl_status_name(int status);
SL_API const char* sl_last_error(void);
SL_API int sl_last_error_chunk(uint64_t* chunk_ordinal);
SL_API int sl_last_error_sample(uint64_t* global_index);

/* Owned text returned by report-producing calls. */
typedef struct sl_text sl_text;
SL_API const char* sl_text_data(const sl_text* text);
SL_API size_t sl_text_size(const sl_text* text);
SL_API void sl_text_free(sl_text* text);

/* ---- Container writing ---------------------------------------------------- */

typedef enum sl_layout { SL_LAYOUT_STREAM = 0, SL_LAYOUT_INDEXABLE = 1 } sl_layout;

typedef enum sl_encoding {
  SL_ENCODING_FIXED_SIZE = 0,
  SL_ENCODING_LENGTH_PREFIXED = 1
} sl_encoding;

typedef struct sl_write_stats {
  uint64_t samples_written;
  uint64_t chunks_written;
  uint64_t bytes_written;
} sl_write_stats;

typedef struct sl_writer sl_writer;

/* fixed_sample_bytes is ignored for SL_ENCODING_LENGTH_PREFIXED. */
SL_API int sl_writer_create(const char* path, sl_layout layout,
                            sl_encoding encoding, uint32_t fixed_sample_bytes,
                            uint32_t samples_per_chunk, sl_writer** out);
SL_API int sl_writer_append(sl_writer* writer, const uint8_t* data,
                            size_t length);
/* Writes the end marker (and footer for indexable files). stats may be NULL. */
SL_API int sl_writer_finish(sl_writer* writer, sl_write_stats* stats);
/* Destroying an unfinished writer leaves a file without an end marker. */
SL_API void sl_writer_destroy(sl_writer* writer);

typedef struct sl_convert_stats {
  uint64_t chunks;
  uint64_t samples;
  uint64_t bytes_written;
  uint64_t largest_chunk_bytes;
  uint64_t peak_buffer_bytes;
  uint64_t index_bytes;
} sl_convert_stats;

/* Stream file -> indexable file, one chunk in memory at a time. */
SL_API int sl_convert(const char* source, const char* destination,
                      sl_convert_stats* stats);

/* ---- Random access ---------------------------------------------------------- */

typedef struct sl_dataset sl_dataset;

typedef struct sl_open_options {
  size_t cache_chunks; /* MRU decoded-chunk cache; 0 disables */
  int drop_os_cache;   /* nonzero: drop OS page cache for the file at open */
} sl_open_options;

typedef struct sl_dataset_info {
  uint16_t format_version;
  sl_encoding encoding;
  uint32_t fixed_sample_bytes;
  uint32_t samples_per_chunk;
  uint64_t total_samples;
  uint64_t total_chunks;
  uint64_t open_bytes_read;
} sl_dataset_info;

typedef struct sl_chunk_info {
  uint64_t chunk_ordinal;
  uint64_t byte_offset;
  uint32_t byte_length;
  uint32_t sample_count;
  uint64_t first_global_index;
  uint64_t checksum;
} sl_chunk_info;

typedef struct sl_io_counters {
  uint64_t bytes_read;
  uint64_t chunk_reads;
  uint64_t cache_hits;
} sl_io_counters;

/* options may be NULL. Fails with SL_ERR_FORMAT on files without a footer. */
SL_API int sl_dataset_open(const char* path, const sl_open_options* options,
                           sl_dataset** out);
SL_API void sl_dataset_close(sl_dataset* dataset);
SL_API int sl_dataset_get_info(const sl_dataset* dataset, sl_dataset_info* out);
SL_API int sl_dataset_get_chunk_info(const sl_dataset* dataset,
                                     uint64_t chunk_ordinal,
                                     sl_chunk_info* out);
/* Copies the payload into buffer. If capacity is too small, returns
 * SL_ERR_BUFFER_TOO_SMALL with *length set to the required size. */
SL_API int sl_dataset_get_sample(const sl_dataset* dataset,
                                 uint64_t global_index, uint8_t* buffer,
                                 size_t capacity, size_t* length);
SL_API int sl_dataset_get_counters(const sl_dataset* dataset,
                                   sl_io_counters* out);

/* ---- Index orders ------------------------------------------------------------- */

typedef enum sl_shuffle_mode {
  SL_SHUFFLE_SEQUENTIAL = 0,
  SL_SHUFFLE_INDICES_MAPPING = 1,
  SL_SHUFFLE_BUFFERED = 2
} sl_shuffle_mode;

typedef struct sl_shuffle_spec {
  sl_shuffle_mode mode;
  uint64_t seed;
  uint64_t epoch;
  uint64_t buffer_size; /* SL_SHUFFLE_BUFFERED only, >= 1 */
} sl_shuffle_spec;

/* Writes the epoch's permutation of [0, n) into out[0..n). */
SL_API int sl_epoch_order(const sl_shuffle_spec* spec, uint64_t n,
                          uint64_t* out);
/* out needs room for ceil((n - worker_id) / world_size) entries. */
SL_API int sl_shard_for_worker(const uint64_t* order, uint64_t n,
                               uint64_t worker_id, uint64_t world_size,
                               uint64_t* out, uint64_t* out_length);

/* ---- Batch loading --------------------------------------------------------------- */

typedef enum sl_generation {
  SL_FETCH_UNORDERED = 0,
  SL_FETCH_ORDERED = 1
} sl_generation;

typedef enum sl_assembly {
  SL_ASSEMBLY_ARRIVAL_ORDER = 0,
  SL_ASSEMBLY_SLOT_ORDER = 1
} sl_assembly;

/* In-place payload transform run on the fetching worker. Called concurrently
 * for distinct samples. Nonzero return fails the sample. */
typedef int (*sl_preprocess_fn)(void* user, uint64_t global_index,
                                uint8_t* payload, size_t length);

typedef struct sl_loader_options {
  sl_shuffle_spec shuffle;
  uint64_t batch_size;
  int drop_last;
  uint64_t worker_id;
  uint64_t world_size;
  sl_generation generation;
  size_t max_concurrent_fetches; /* 0: min(batch_size, 4 x hw threads) */
  size_t prefetch_depth;
  sl_assembly assembly;
  uint64_t synthetic_read_latency_us;
  int skip_failed_batches; /* nonzero: skip and count instead of failing */
  sl_preprocess_fn preprocess;
  void* preprocess_user;
} sl_loader_options;

typedef struct sl_loader sl_loader;
typedef struct sl_batch sl_batch;

SL_API void sl_loader_options_init(sl_loader_options* options);
/* One epoch. The loader keeps the dataset alive. */
SL_API int sl_loader_create(sl_dataset* dataset,
                            const sl_loader_options* options, sl_loader** out);
/* SL_OK with *out set, or SL_END after the last batch. */
SL_API int sl_loader_next(sl_loader* loader, sl_batch** out);
SL_API uint64_t sl_loader_failed_batches(const sl_loader* loader);
SL_API void sl_loader_destroy(sl_loader* loader);

SL_API uint64_t sl_batch_ordinal(const sl_batch* batch);
SL_API size_t sl_batch_size(const sl_batch* batch);
SL_API int sl_batch_sample(const sl_batch* batch, size_t k,
                           uint64_t* global_index, const uint8_t** data,
                           size_t* length);
SL_API int sl_batch_requested(const sl_batch* batch, size_t k,
                              uint64_t* global_index);
SL_API int sl_batch_arrival(const sl_batch* batch, size_t k,
                            uint64_t* global_index);
SL_API void sl_batch_free(sl_batch* batch);

/* ---- Order-invariant SGD ------------------------------------------------------------ */

typedef struct sl_train_options {
  sl_shuffle_spec shuffle;
  uint64_t batch_size;
  int drop_last;
  uint64_t epochs;
  double eta;
  size_t dim;
  sl_generation generation;
  size_t max_concurrent_fetches;
  size_t prefetch_depth;
} sl_train_options;

typedef struct sl_train_result sl_train_result;

SL_API void sl_train_options_init(sl_train_options* options);
/* theta0 may be NULL (zeros). */
SL_API int sl_train(sl_dataset* dataset, const sl_train_options* options,
                    const double* theta0, sl_train_result** out);
SL_API size_t sl_train_result_dim(const sl_train_result* result);
SL_API const double* sl_train_result_theta(const sl_train_result* result);
SL_API size_t sl_train_result_steps(const sl_train_result* result);
SL_API const double* sl_train_result_losses(const sl_train_result* result);
SL_API void sl_train_result_free(sl_train_result* result);

/* ---- Harness ---------------------------------------------------------------------------- */

typedef struct sl_gen_options {
  uint64_t samples;
  uint32_t sample_bytes;
  int variable_size;
  uint32_t dim; /* > 0: decodable regression samples */
  double noise;
  int sort_by_target;
  uint32_t samples_per_chunk; /* 0: about 64 MiB per chunk */
  uint64_t seed;
  sl_layout layout;
} sl_gen_options;

SL_API void sl_gen_options_init(sl_gen_options* options);
SL_API int sl_generate(const char* path, const sl_gen_options* options,
                       sl_write_stats* stats);

/* Summary of sl_convert suitable for printing. */
SL_API int sl_convert_describe(const sl_convert_stats* stats, sl_text** out);

/* Checksum scan, manifest audit and, when a sibling is given (or found next
 * to path with the other .shs/.shi extension when auto_sibling is nonzero),
 * a sample-by-sample comparison. Returns SL_OK or SL_ERR_VERIFICATION; the
 * report is produced in both cases. */
SL_API int sl_verify(const char* path, const char* sibling, int auto_sibling,
                     sl_text** report);

typedef struct sl_bench_options {
  const char* dataset_path;
  sl_shuffle_mode mode;
  uint64_t buffer_size;
  uint64_t seed;
  sl_generation generation;
  uint64_t batch_size;
  uint64_t steps;
  uint64_t warmup_steps;
  uint64_t repeats;
  size_t concurrency; /* 0: default */
  size_t prefetch_depth;
  uint64_t inject_latency_us;
  uint64_t compute_us;
  uint64_t workers;
  size_t cache_chunks;
  int drop_os_cache;
} sl_bench_options;

SL_API void sl_bench_options_init(sl_bench_options* options);
/* Appends rows to csv_path / json_path when non-NULL; rows (CSV text with a
 * header) are returned through *rows when rows is non-NULL. */
SL_API int sl_bench(const sl_bench_options* options, const char* csv_path,
                    const char* json_path, sl_text** rows);

/* Speedup of candidate over baseline. Writes a speedup CSV to out_csv when
 * non-NULL. Returns SL_ERR_INVALID_ARGUMENT if any aggregate row could not
 * be paired; the table lists the unmatched configurations. */
SL_API int sl_compare(const char* csv_path, const char* baseline,
                      const char* candidate, const char* out_csv,
                      sl_text** table);

#ifdef __cplusplus
}
#endif

#endif /* SHUFLOAD_SHUFLOAD_H_ */
