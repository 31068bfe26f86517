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
/* Exercises the public C header from a C translation unit. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "shufload/shufload.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, \
              __LINE__, #cond, sl_last_error());                       \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static int fail_on_seven(void* user, uint64_t index, uint8_t* data,
                         size_t length) {
  (void)data;
  (void)length;
  ++*(int*)user;
  return index == 7 ? 42 : 0;
}

int main(void) {
  char dir[] = "/tmp/shufload-c-XXXXXX";
  if (mkdtemp(dir) == NULL) return 1;
  char stream_path[256], index_path[256], raw_path[256];
  snprintf(stream_path, sizeof stream_path, "%s/d.shs", dir);
  snprintf(index_path, sizeof index_path, "%s/d.shi", dir);
  snprintf(raw_path, sizeof raw_path, "%s/raw.shi", dir);

  EXPECT(strcmp(sl_status_name(SL_ERR_CORRUPT), "corrupt data") == 0);
  EXPECT(strlen(sl_version()) > 0);

  sl_gen_options gen;
  sl_gen_options_init(&gen);
  gen.samples = 300;
  gen.dim = 4;
  gen.samples_per_chunk = 16;
  gen.seed = 5;
  gen.layout = SL_LAYOUT_STREAM;
  sl_write_stats ws;
  EXPECT(sl_generate(stream_path, &gen, &ws) == SL_OK);
  EXPECT(ws.samples_written == 300);
  EXPECT(ws.chunks_written == 19);

  sl_convert_stats cs;
  EXPECT(sl_convert(stream_path, index_path, &cs) == SL_OK);
  EXPECT(cs.chunks == 19);
  EXPECT(cs.peak_buffer_bytes <= 2 * cs.largest_chunk_bytes);
  sl_text* text = NULL;
  EXPECT(sl_convert_describe(&cs, &text) == SL_OK);
  EXPECT(strstr(sl_text_data(text), "chunks: 19") != NULL);
  sl_text_free(text);

  sl_dataset* ds = NULL;
  EXPECT(sl_dataset_open(stream_path, NULL, &ds) == SL_ERR_FORMAT);
  EXPECT(strstr(sl_last_error(), "no footer index") != NULL);
  EXPECT(sl_dataset_open("/nonexistent/x.shi", NULL, &ds) == SL_ERR_IO);

  sl_open_options oo = {4, 0};
  EXPECT(sl_dataset_open(index_path, &oo, &ds) == SL_OK);
  sl_dataset_info info;
  EXPECT(sl_dataset_get_info(ds, &info) == SL_OK);
  EXPECT(info.total_samples == 300);
  EXPECT(info.total_chunks == 19);
  EXPECT(info.fixed_sample_bytes == 40);
  EXPECT(info.open_bytes_read == 32 + 12 + 40 * 19);
  sl_chunk_info ci;
  EXPECT(sl_dataset_get_chunk_info(ds, 18, &ci) == SL_OK);
  EXPECT(ci.sample_count == 300 - 18 * 16);
  EXPECT(ci.first_global_index == 18 * 16);
  EXPECT(sl_dataset_get_chunk_info(ds, 19, &ci) == SL_ERR_INDEX);

  uint8_t small[8];
  uint8_t buf[64];
  size_t len = 0;
  EXPECT(sl_dataset_get_sample(ds, 3, small, sizeof small, &len) ==
         SL_ERR_BUFFER_TOO_SMALL);
  EXPECT(len == 40);
  EXPECT(sl_dataset_get_sample(ds, 3, buf, sizeof buf, &len) == SL_OK);
  EXPECT(sl_dataset_get_sample(ds, 300, buf, sizeof buf, &len) ==
         SL_ERR_INDEX);

  /* Epoch orders and sharding. */
  sl_shuffle_spec spec = {SL_SHUFFLE_INDICES_MAPPING, 11, 0, 1};
  uint64_t order[300];
  EXPECT(sl_epoch_order(&spec, 300, order) == SL_OK);
  {
    int seen[300] = {0};
    int ok = 1;
    for (int i = 0; i < 300; ++i) {
      if (order[i] >= 300 || seen[order[i]]++) ok = 0;
    }
    EXPECT(ok);
  }
  uint64_t shard[150];
  uint64_t shard_len = 0;
  EXPECT(sl_shard_for_worker(order, 300, 1, 2, shard, &shard_len) == SL_OK);
  EXPECT(shard_len == 150);
  EXPECT(shard[0] == order[1]);
  EXPECT(sl_shard_for_worker(order, 300, 2, 2, shard, &shard_len) ==
         SL_ERR_INVALID_ARGUMENT);
  spec.mode = (sl_shuffle_mode)99;
  EXPECT(sl_epoch_order(&spec, 300, order) == SL_ERR_INVALID_ARGUMENT);
  spec.mode = SL_SHUFFLE_INDICES_MAPPING;

  /* One epoch through the loader. */
  sl_loader_options lo;
  sl_loader_options_init(&lo);
  lo.shuffle = spec;
  lo.batch_size = 32;
  lo.max_concurrent_fetches = 4;
  sl_loader* loader = NULL;
  EXPECT(sl_loader_create(ds, &lo, &loader) == SL_OK);
  {
    int seen[300] = {0};
    uint64_t expect_ordinal = 0;
    sl_batch* batch = NULL;
    int rc;
    while ((rc = sl_loader_next(loader, &batch)) == SL_OK) {
      EXPECT(sl_batch_ordinal(batch) == expect_ordinal++);
      for (size_t k = 0; k < sl_batch_size(batch); ++k) {
        uint64_t index;
        const uint8_t* data;
        size_t n;
        EXPECT(sl_batch_sample(batch, k, &index, &data, &n) == SL_OK);
        EXPECT(n == 40);
        ++seen[index];
      }
      uint64_t dummy;
      EXPECT(sl_batch_sample(batch, sl_batch_size(batch), &dummy, NULL, NULL) ==
             SL_ERR_INDEX);
      EXPECT(sl_batch_requested(batch, 0, &dummy) == SL_OK);
      EXPECT(sl_batch_arrival(batch, 0, &dummy) == SL_OK);
      sl_batch_free(batch);
    }
    EXPECT(rc == SL_END);
    EXPECT(expect_ordinal == 10);
    int ok = 1;
    for (int i = 0; i < 300; ++i) ok &= seen[i] == 1;
    EXPECT(ok);
  }
  sl_loader_destroy(loader);

  /* A failing preprocess callback, with skip-and-report. */
  int calls = 0;
  lo.shuffle.mode = SL_SHUFFLE_SEQUENTIAL;
  lo.preprocess = fail_on_seven;
  lo.preprocess_user = &calls;
  lo.skip_failed_batches = 1;
  EXPECT(sl_loader_create(ds, &lo, &loader) == SL_OK);
  {
    int yielded = 0;
    sl_batch* batch = NULL;
    while (sl_loader_next(loader, &batch) == SL_OK) {
      ++yielded;
      sl_batch_free(batch);
    }
    EXPECT(yielded == 9);
    EXPECT(sl_loader_failed_batches(loader) == 1);
    EXPECT(calls > 0);
  }
  sl_loader_destroy(loader);
  lo.skip_failed_batches = 0;
  EXPECT(sl_loader_create(ds, &lo, &loader) == SL_OK);
  {
    sl_batch* batch = NULL;
    EXPECT(sl_loader_next(loader, &batch) == SL_ERR_INVALID_ARGUMENT);
    uint64_t where = 0;
    EXPECT(sl_last_error_sample(&where) == SL_OK);
    EXPECT(where == 7);
  }
  sl_loader_destroy(loader);

  /* Training: ordered and unordered agree bit for bit. */
  sl_train_options to;
  sl_train_options_init(&to);
  to.dim = 4;
  to.epochs = 2;
  to.batch_size = 16;
  to.shuffle = spec;
  to.generation = SL_FETCH_ORDERED;
  sl_train_result* a = NULL;
  sl_train_result* b = NULL;
  EXPECT(sl_train(ds, &to, NULL, &a) == SL_OK);
  to.generation = SL_FETCH_UNORDERED;
  to.max_concurrent_fetches = 8;
  EXPECT(sl_train(ds, &to, NULL, &b) == SL_OK);
  EXPECT(sl_train_result_steps(a) == 2 * 19);
  EXPECT(sl_train_result_dim(a) == 4);
  EXPECT(memcmp(sl_train_result_theta(a), sl_train_result_theta(b),
                4 * sizeof(double)) == 0);
  EXPECT(memcmp(sl_train_result_losses(a), sl_train_result_losses(b),
                sl_train_result_steps(a) * sizeof(double)) == 0);
  sl_train_result_free(a);
  sl_train_result_free(b);
  to.dim = 3;
  EXPECT(sl_train(ds, &to, NULL, &a) == SL_ERR_FORMAT);
  sl_dataset_close(ds);

  /* Raw writer. */
  sl_writer* w = NULL;
  EXPECT(sl_writer_create(raw_path, SL_LAYOUT_INDEXABLE,
                          SL_ENCODING_LENGTH_PREFIXED, 0, 3, &w) == SL_OK);
  for (uint8_t i = 0; i < 10; ++i) {
    uint8_t payload[16];
    memset(payload, i, sizeof payload);
    EXPECT(sl_writer_append(w, payload, i) == SL_OK);
  }
  EXPECT(sl_writer_finish(w, &ws) == SL_OK);
  EXPECT(ws.chunks_written == 4);
  sl_writer_destroy(w);
  EXPECT(sl_dataset_open(raw_path, NULL, &ds) == SL_OK);
  EXPECT(sl_dataset_get_sample(ds, 9, buf, sizeof buf, &len) == SL_OK);
  EXPECT(len == 9 && buf[0] == 9);
  EXPECT(sl_dataset_get_sample(ds, 0, buf, sizeof buf, &len) == SL_OK);
  EXPECT(len == 0);
  sl_dataset_close(ds);

  /* Verify, with the sibling discovered automatically. */
  EXPECT(sl_verify(index_path, NULL, 1, &text) == SL_OK);
  EXPECT(strstr(sl_text_data(text), "sibling round trip: ok") != NULL);
  sl_text_free(text);

  /* Bench and compare. */
  char csv[256];
  snprintf(csv, sizeof csv, "%s/m.csv", dir);
  sl_bench_options bo;
  sl_bench_options_init(&bo);
  bo.dataset_path = index_path;
  bo.batch_size = 8;
  bo.steps = 5;
  bo.warmup_steps = 1;
  bo.repeats = 1;
  EXPECT(sl_bench(&bo, csv, NULL, NULL) == SL_OK);
  bo.generation = SL_FETCH_ORDERED;
  EXPECT(sl_bench(&bo, csv, NULL, &text) == SL_OK);
  EXPECT(strncmp(sl_text_data(text), "variant,", 8) == 0);
  sl_text_free(text);
  EXPECT(sl_compare(csv, "ordered", "unordered", NULL, &text) == SL_OK);
  EXPECT(strstr(sl_text_data(text), "speedup") != NULL);
  sl_text_free(text);
  EXPECT(sl_compare(csv, "ordered", "buffered", NULL, NULL) ==
         SL_ERR_INVALID_ARGUMENT);
  bo.batch_size = 1000;
  EXPECT(sl_bench(&bo, NULL, NULL, NULL) == SL_ERR_INVALID_ARGUMENT);

  char cmd[300];
  snprintf(cmd, sizeof cmd, "rm -rf %s", dir);
  if (system(cmd) != 0) ++failures;
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("c api smoke test: ok\n");
  return 0;
}
