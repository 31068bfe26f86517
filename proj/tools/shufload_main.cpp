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
// Command-line front end. Talks to the library only through shufload.h.

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "shufload/shufload.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitVerification = 2;
constexpr int kExitIo = 3;

int ExitCodeFor(int status) {
  switch (status) {
    case SL_OK:
    case SL_END:
      return kExitOk;
    case SL_ERR_VERIFICATION:
    case SL_ERR_CORRUPT:
      return kExitVerification;
    case SL_ERR_IO:
    case SL_ERR_ABORTED_FILE:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

int Report(int status, const char* what) {
  if (status == SL_OK) return kExitOk;
  std::fprintf(stderr, "shufload %s: %s: %s\n", what, sl_status_name(status),
               sl_last_error());
  uint64_t where = 0;
  if (sl_last_error_chunk(&where) == SL_OK) {
    std::fprintf(stderr, "  chunk: %llu\n",
                 static_cast<unsigned long long>(where));
  }
  if (sl_last_error_sample(&where) == SL_OK) {
    std::fprintf(stderr, "  sample: %llu\n",
                 static_cast<unsigned long long>(where));
  }
  return ExitCodeFor(status);
}

void PrintAndFree(sl_text* text, std::FILE* to = stdout) {
  if (text == nullptr) return;
  std::fwrite(sl_text_data(text), 1, sl_text_size(text), to);
  sl_text_free(text);
}

const std::map<std::string, sl_layout> kFormats = {
    {"stream", SL_LAYOUT_STREAM}, {"indexable", SL_LAYOUT_INDEXABLE}};

const std::map<std::string, sl_shuffle_mode> kModes = {
    {"sequential", SL_SHUFFLE_SEQUENTIAL},
    {"buffered", SL_SHUFFLE_BUFFERED},
    {"indices-mapping", SL_SHUFFLE_INDICES_MAPPING}};

struct GenArgs {
  std::string path;
  sl_gen_options options{};
};

struct ConvertArgs {
  std::string source;
  std::string destination;
};

struct BenchArgs {
  std::string dataset;
  std::string csv;
  std::string json;
  bool ordered = false;
  bool unordered = false;
  sl_bench_options options{};
};

struct VerifyArgs {
  std::string path;
  std::string sibling;
  bool no_sibling = false;
};

struct CompareArgs {
  std::string csv;
  std::string baseline;
  std::string candidate;
  std::string out;
};

int RunGen(GenArgs& a) {
  sl_write_stats stats{};
  const int status = sl_generate(a.path.c_str(), &a.options, &stats);
  if (status != SL_OK) return Report(status, "gen");
  std::printf("wrote %s: %llu samples, %llu chunks, %llu bytes\n",
              a.path.c_str(),
              static_cast<unsigned long long>(stats.samples_written),
              static_cast<unsigned long long>(stats.chunks_written),
              static_cast<unsigned long long>(stats.bytes_written));
  return kExitOk;
}

int RunConvert(const ConvertArgs& a) {
  sl_convert_stats stats{};
  int status = sl_convert(a.source.c_str(), a.destination.c_str(), &stats);
  if (status != SL_OK) return Report(status, "convert");
  sl_text* summary = nullptr;
  status = sl_convert_describe(&stats, &summary);
  if (status != SL_OK) return Report(status, "convert");
  PrintAndFree(summary);
  return kExitOk;
}

int RunBench(BenchArgs& a) {
  a.options.dataset_path = a.dataset.c_str();
  a.options.generation = a.ordered ? SL_FETCH_ORDERED : SL_FETCH_UNORDERED;
  sl_text* rows = nullptr;
  const int status =
      sl_bench(&a.options, a.csv.empty() ? nullptr : a.csv.c_str(),
               a.json.empty() ? nullptr : a.json.c_str(), &rows);
  if (status != SL_OK) return Report(status, "bench");
  PrintAndFree(rows);
  return kExitOk;
}

int RunVerify(const VerifyArgs& a) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(a.path, ec)) {
    std::fprintf(stderr, "shufload verify: cannot open %s\n", a.path.c_str());
    return kExitIo;
  }
  sl_text* report = nullptr;
  const int status =
      sl_verify(a.path.c_str(), a.sibling.empty() ? nullptr : a.sibling.c_str(),
                a.no_sibling ? 0 : 1, &report);
  PrintAndFree(report, status == SL_OK ? stdout : stderr);
  if (status == SL_OK) return kExitOk;
  if (report == nullptr) return Report(status, "verify");
  return kExitVerification;
}

int RunCompare(const CompareArgs& a) {
  sl_text* table = nullptr;
  const int status =
      sl_compare(a.csv.c_str(), a.baseline.c_str(), a.candidate.c_str(),
                 a.out.empty() ? nullptr : a.out.c_str(), &table);
  PrintAndFree(table);
  return Report(status, "compare");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shufload: shuffled data loading toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sl_version());

  GenArgs gen;
  sl_gen_options_init(&gen.options);
  std::string gen_format = "indexable";
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("path", gen.path, "Output file")->required();
  gen_cmd->add_option("--samples", gen.options.samples, "Number of samples")
      ->required();
  gen_cmd->add_option("--sample-bytes", gen.options.sample_bytes,
                      "Payload bytes per sample (opaque payloads)")
      ->capture_default_str();
  gen_cmd->add_option("--dim", gen.options.dim,
                      "Feature dimension; > 0 writes decodable regression "
                      "samples instead of opaque payloads");
  gen_cmd->add_option("--chunk-samples", gen.options.samples_per_chunk,
                      "Samples per chunk (0: about 64 MiB per chunk)");
  gen_cmd->add_option("--seed", gen.options.seed, "Generator seed");
  gen_cmd->add_option("--format", gen_format, "Container layout")
      ->check(CLI::IsMember({"stream", "indexable"}))
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen.options.noise, "Target noise amplitude")
      ->capture_default_str();
  gen_cmd->add_flag("--variable-size", gen.options.variable_size,
                    "Vary opaque payload sizes in [1, sample-bytes]");
  gen_cmd->add_flag("--sort-by-target", gen.options.sort_by_target,
                    "Store regression samples sorted by target value");

  ConvertArgs convert;
  auto* convert_cmd =
      app.add_subcommand("convert", "Convert a stream file to indexable");
  convert_cmd->add_option("source", convert.source, "Stream file")->required();
  convert_cmd->add_option("destination", convert.destination,
                          "Indexable output file")
      ->required();

  BenchArgs bench;
  sl_bench_options_init(&bench.options);
  std::string bench_mode = "indices-mapping";
  auto* bench_cmd = app.add_subcommand("bench", "Measure loading throughput");
  bench_cmd->add_option("dataset", bench.dataset, "Indexable dataset")
      ->required();
  bench_cmd->add_option("--mode", bench_mode, "Shuffle mode")
      ->check(CLI::IsMember({"sequential", "buffered", "indices-mapping"}))
      ->capture_default_str();
  auto* ordered = bench_cmd->add_flag("--ordered", bench.ordered,
                                      "Serial fetch in index order");
  auto* unordered = bench_cmd->add_flag(
      "--unordered", bench.unordered,
      "Concurrent fetch, batch assembled in completion order (default)");
  ordered->excludes(unordered);
  bench_cmd->add_option("--batch-size", bench.options.batch_size)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--steps", bench.options.steps, "Measured steps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bench.options.warmup_steps,
                        "Unmeasured warmup steps")
      ->capture_default_str();
  bench_cmd->add_option("--repeats", bench.options.repeats)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--concurrency", bench.options.concurrency,
                        "Concurrent fetches (0: min(batch, 4 x threads))");
  bench_cmd->add_option("--prefetch-depth", bench.options.prefetch_depth,
                        "Batches in flight beyond the current one")
      ->capture_default_str();
  bench_cmd->add_option("--inject-latency-us", bench.options.inject_latency_us,
                        "Delay added to every chunk read");
  bench_cmd->add_option("--compute-us", bench.options.compute_us,
                        "Simulated compute per step");
  bench_cmd->add_option("--workers", bench.options.workers,
                        "Data-parallel learners")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--buffer-size", bench.options.buffer_size,
                        "Buffered-shuffle buffer size")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.options.seed, "Shuffle seed");
  bench_cmd->add_option("--cache-chunks", bench.options.cache_chunks,
                        "Bounded chunk cache size (0: no cache)");
  bench_cmd->add_flag("--drop-os-cache", bench.options.drop_os_cache,
                      "Drop the OS page cache for the file before each repeat");
  bench_cmd->add_option("--out", bench.csv, "Append rows to this CSV");
  bench_cmd->add_option("--json", bench.json,
                        "Append rows to this JSON-lines file");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check a dataset file");
  verify_cmd->add_option("path", verify.path, "Dataset file")->required();
  auto* sibling = verify_cmd->add_option(
      "--sibling", verify.sibling,
      "File with the same samples to compare against (default: the .shs/.shi "
      "file next to path, if present)");
  verify_cmd->add_flag("--no-sibling", verify.no_sibling,
                       "Skip the sibling comparison")
      ->excludes(sibling);

  CompareArgs compare;
  auto* compare_cmd =
      app.add_subcommand("compare", "Speedup table from a metrics CSV");
  compare_cmd->add_option("csv", compare.csv, "Metrics CSV")->required();
  compare_cmd->add_option("--baseline", compare.baseline,
                          "Baseline selector: ordered, unordered, a mode, "
                          "or mode/fetch")
      ->required();
  compare_cmd->add_option("--candidate", compare.candidate,
                          "Candidate selector")
      ->required();
  compare_cmd->add_option("--out", compare.out, "Write the speedups as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  if (*gen_cmd) {
    gen.options.layout = kFormats.at(gen_format);
    return RunGen(gen);
  }
  if (*convert_cmd) return RunConvert(convert);
  if (*bench_cmd) {
    bench.options.mode = kModes.at(bench_mode);
    return RunBench(bench);
  }
  if (*verify_cmd) return RunVerify(verify);
  if (*compare_cmd) return RunCompare(compare);
  return kExitValidation;
}
