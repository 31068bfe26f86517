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
// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed below.

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "shufload/bench.hpp"
#include "shufload/fetch.hpp"
#include "shufload/format.hpp"
#include "shufload/sampler.hpp"
#include "shufload/trainer.hpp"

using namespace shufload;
using Clock = std::chrono::steady_clock;
using oracle::Bytes;

namespace {

// Tolerances and budgets.
constexpr double kCoverageBudgetS = 60;
constexpr double kInvarianceBudgetS = 60;
constexpr double kRoundTripBudgetS = 60;
constexpr uint64_t kOpenSlackBytes = 4096;
constexpr uint64_t kBigFileBytes = uint64_t{4} << 30;
constexpr double kConverterBudgetS = 600;
constexpr double kSpeedupFloor = 8.0;
constexpr double kSpeedupBudgetS = 120;
constexpr uint64_t kChiTrials = 240000;
constexpr double kGradTolerance = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Bytes this process has pulled through read-family syscalls.
std::optional<uint64_t> ProcRchar() {
  std::ifstream in("/proc/self/io");
  std::string key;
  uint64_t value;
  while (in >> key >> value) {
    if (key == "rchar:") return value;
  }
  return std::nullopt;
}

std::optional<uint64_t> PeakRssBytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      return std::stoull(line.substr(6)) * 1024;
    }
  }
  return std::nullopt;
}

void ResetPeakRss() { std::ofstream("/proc/self/clear_refs") << "5"; }

std::string Gen(const oracle::TempDir& dir, const std::string& name,
                bench::GenOptions g) {
  const std::string path = dir / name;
  bench::GenerateDataset(g, path);
  return path;
}

// --- 1 ---------------------------------------------------------------------------------

Outcome Coverage() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20261014);
  uint64_t epochs_checked = 0;
  for (int config = 0; config < 100; ++config) {
    const uint64_t n = rng() % 100001;
    const uint64_t batch = 1 + rng() % 512;
    const uint64_t seed = rng();
    const uint64_t buffer = 1 + rng() % 4096;
    for (auto mode : {sampler::ShuffleMode::kSequential,
                      sampler::ShuffleMode::kIndicesMapping,
                      sampler::ShuffleMode::kBuffered}) {
      for (uint64_t epoch = 0; epoch < 2; ++epoch) {
        const auto plan = sampler::MakeEpochPlan({mode, seed, epoch, buffer}, n,
                                                 batch, false);
        std::vector<uint8_t> seen(n, 0);
        uint64_t total = 0;
        for (const auto& b : plan.Batches()) {
          for (auto i : b.indices) {
            if (i >= n || seen[i]++) {
              return {false, Fmt("config %d (%s, n=%llu): index %llu repeated "
                                 "or out of range",
                                 config, sampler::ShuffleModeName(mode),
                                 static_cast<unsigned long long>(n),
                                 static_cast<unsigned long long>(i))};
            }
            ++total;
          }
        }
        if (total != n) {
          return {false, Fmt("config %d: %llu of %llu indices covered", config,
                             static_cast<unsigned long long>(total),
                             static_cast<unsigned long long>(n))};
        }
        ++epochs_checked;
      }
    }
  }
  const double s = Since(t0);
  return {s < kCoverageBudgetS,
          Fmt("%llu epochs over 100 configs x 3 modes covered [0, n) exactly "
              "once; %.2f s (budget %.0f s)",
              static_cast<unsigned long long>(epochs_checked), s,
              kCoverageBudgetS)};
}

// --- 2 ---------------------------------------------------------------------------------

bool BitEqual(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Outcome OrderInvariance() {
  const auto t0 = Clock::now();
  oracle::TempDir dir("shufload-acc2");
  uint64_t reordered_batches = 0;
  uint64_t total_batches = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    bench::GenOptions g;
    g.samples = 10000;
    g.dim = 8;
    g.samples_per_chunk = 64;
    g.seed = seed;
    const auto path = Gen(dir, "d" + std::to_string(seed) + ".shi", g);
    auto handle = format::DatasetHandle::Open(path);

    trainer::ModelState init{std::vector<double>(8, 0.0), 0.05};
    trainer::TrainOptions ordered;
    ordered.shuffle.seed = seed * 7919;
    ordered.batch_size = 32;
    ordered.epochs = 3;
    ordered.loader.generation = fetch::Generation::kOrdered;
    trainer::TrainOptions unordered = ordered;
    unordered.loader.generation = fetch::Generation::kUnordered;
    unordered.loader.fetch.max_concurrent_fetches = 16;
    unordered.loader.fetch.prefetch_depth = 2;
    unordered.loader.fetch.synthetic_read_latency =
        std::chrono::microseconds(20);

    const auto a = trainer::TrainEpochs(handle, init, ordered);
    const auto b = trainer::TrainEpochs(handle, init, unordered);
    if (a.loss_trace.size() != 3 * 313) {
      return {false, Fmt("seed %llu: loss trace has %zu steps",
                         static_cast<unsigned long long>(seed),
                         a.loss_trace.size())};
    }
    if (!BitEqual(a.state.theta, b.state.theta) ||
        !BitEqual(a.loss_trace, b.loss_trace)) {
      return {false, Fmt("seed %llu: unordered run differs from ordered",
                         static_cast<unsigned long long>(seed))};
    }

    // Confirm the unordered loader really did reorder samples.
    sampler::ShuffleSpec spec = unordered.shuffle;
    const auto plan = sampler::MakeEpochPlan(spec, 10000, 32, false);
    fetch::EpochLoader loader(handle, plan.Batches(), unordered.loader);
    while (auto batch = loader.Next()) {
      ++total_batches;
      reordered_batches += batch->arrival_order != batch->requested;
    }
  }
  const double s = Since(t0);
  const bool pass = s < kInvarianceBudgetS && reordered_batches > 0;
  return {pass, Fmt("theta and loss trace bit-identical for 10 seeds "
                    "(n=10000, dim=8, 3 epochs); %llu/%llu unordered batches "
                    "arrived out of order; %.2f s (budget %.0f s)",
                    static_cast<unsigned long long>(reordered_batches),
                    static_cast<unsigned long long>(total_batches), s,
                    kInvarianceBudgetS)};
}

// --- 3 ---------------------------------------------------------------------------------

Outcome RoundTrip() {
  const auto t0 = Clock::now();
  oracle::TempDir dir("shufload-acc3");
  std::mt19937_64 rng(33);
  uint64_t checked = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const bool variable = trial % 2 == 1;
    const size_t n = trial < 2 ? 10000 : rng() % 10001;
    const size_t bytes = 1 + rng() % 300;
    const uint32_t spc = 1 + rng() % 700;
    const auto samples = oracle::RandomPayloads(rng, n, bytes, variable);
    const auto chunking = variable
                              ? format::ChunkingOptions::LengthPrefixed(spc)
                              : format::ChunkingOptions::Fixed(bytes, spc);
    const std::string shs = dir / "t.shs";
    const std::string shi = dir / "t.shi";
    {
      format::FileSink sink(shs);
      format::WriteStreamDataset(samples, sink, chunking);
    }
    format::ConvertStreamToIndexable(shs, shi);
    const auto stream_view = oracle::ParseFile(oracle::ReadFile(shs));
    const auto index_view = oracle::ParseFile(oracle::ReadFile(shi));
    if (stream_view.samples != samples || index_view.samples != samples) {
      return {false, Fmt("trial %d: converted bytes differ", trial)};
    }
    auto handle = format::DatasetHandle::Open(shi);
    if (handle->num_samples() != n) {
      return {false, Fmt("trial %d: manifest has %llu samples", trial,
                         static_cast<unsigned long long>(handle->num_samples()))};
    }
    for (size_t i = 0; i < n; ++i) {
      if (handle->GetSample(i).payload != stream_view.samples[i]) {
        return {false, Fmt("trial %d: get_sample(%zu) differs from stream "
                           "position %zu",
                           trial, i, i)};
      }
    }
    checked += n;
  }
  const double s = Since(t0);
  return {s < kRoundTripBudgetS,
          Fmt("12 datasets (fixed and variable sizes), %llu samples "
              "byte-exact after conversion and via get_sample; %.2f s "
              "(budget %.0f s)",
              static_cast<unsigned long long>(checked), s, kRoundTripBudgetS)};
}

// --- 4 ---------------------------------------------------------------------------------

struct OpenMeasure {
  uint64_t instrumented = 0;
  std::optional<uint64_t> syscall_bytes;
  uint64_t footer_bytes = 0;  // entries + length + magic, from the file
  uint64_t file_bytes = 0;
};

OpenMeasure MeasureOpen(const oracle::TempDir& dir, uint64_t chunks,
                        uint32_t sample_bytes) {
  bench::GenOptions g;
  g.samples = chunks * 4;
  g.sample_bytes = sample_bytes;
  g.samples_per_chunk = 4;
  const auto path = Gen(dir, "open.shi", g);
  OpenMeasure m;
  m.file_bytes = std::filesystem::file_size(path);
  {
    std::ifstream in(path, std::ios::binary);
    in.seekg(-12, std::ios::end);
    Bytes tail(12);
    in.read(reinterpret_cast<char*>(tail.data()), 12);
    m.footer_bytes = oracle::Le<uint64_t>(tail, 0) + 12;
  }
  // Reading /proc/self/io is itself counted; measure that overhead first.
  const auto probe0 = ProcRchar();
  const auto probe1 = ProcRchar();
  const auto before = ProcRchar();
  auto handle = format::DatasetHandle::Open(path);
  const auto after = ProcRchar();
  m.instrumented = handle->open_bytes_read();
  if (probe0 && probe1 && before && after) {
    m.syscall_bytes = (*after - *before) - (*probe1 - *probe0);
  }
  return m;
}

Outcome OpenCost() {
  oracle::TempDir dir("shufload-acc4");
  const auto small = MeasureOpen(dir, 100, 64);
  const auto large = MeasureOpen(dir, 10000, 64);
  const auto fat = MeasureOpen(dir, 100, 6400);
  std::vector<std::string> problems;
  for (const auto* m : {&small, &large, &fat}) {
    if (m->instrumented > format::kHeaderBytes + m->footer_bytes + kOpenSlackBytes) {
      problems.push_back("open exceeds header + footer + slack");
    }
    if (m->syscall_bytes && *m->syscall_bytes != m->instrumented) {
      problems.push_back(Fmt("syscall bytes %llu != instrumented %llu",
                             static_cast<unsigned long long>(*m->syscall_bytes),
                             static_cast<unsigned long long>(m->instrumented)));
    }
  }
  const uint64_t growth = large.instrumented - small.instrumented;
  if (growth != format::kIndexEntryBytes * (10000 - 100)) {
    problems.push_back("growth is not proportional to chunk count");
  }
  if (fat.instrumented != small.instrumented) {
    problems.push_back("100x payload changed open bytes");
  }
  const double payload_change =
      100.0 * (static_cast<double>(fat.instrumented) - small.instrumented) /
      small.instrumented;
  std::string detail = Fmt(
      "open bytes: 100 chunks %llu, 10^4 chunks %llu (delta %llu = 40 B x "
      "9900), 100 chunks with 100x payload %llu (%+.1f%%, file %llu -> %llu "
      "B)%s",
      static_cast<unsigned long long>(small.instrumented),
      static_cast<unsigned long long>(large.instrumented),
      static_cast<unsigned long long>(growth),
      static_cast<unsigned long long>(fat.instrumented), payload_change,
      static_cast<unsigned long long>(small.file_bytes),
      static_cast<unsigned long long>(fat.file_bytes),
      small.syscall_bytes ? "; read syscalls agree" : "");
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

// --- 5 ---------------------------------------------------------------------------------

Outcome ConverterMemory() {
  const auto t0 = Clock::now();
  oracle::TempDir dir("shufload-acc5");
  bench::GenOptions g;
  g.sample_bytes = 4096;
  g.samples_per_chunk = 16384;  // 64 MiB chunks
  g.samples = kBigFileBytes / g.sample_bytes;
  g.format = bench::DatasetFormat::kStream;
  g.seed = 5;
  const auto src = Gen(dir, "big.shs", g);
  const uint64_t src_bytes = std::filesystem::file_size(src);
  const double gen_s = Since(t0);

  ResetPeakRss();
  const auto rss_before = PeakRssBytes();
  const auto t1 = Clock::now();
  const auto stats = format::ConvertStreamToIndexable(src, dir / "big.shi");
  const double convert_s = Since(t1);
  const auto rss_after = PeakRssBytes();

  const uint64_t chunk_bytes = uint64_t{g.sample_bytes} * g.samples_per_chunk;
  const uint64_t bound = 2 * chunk_bytes + stats.index_bytes;

  // Spot-check the output against the source with raw positional reads.
  auto handle = format::DatasetHandle::Open(dir / "big.shi");
  std::vector<std::string> problems;
  if (handle->num_samples() != g.samples) problems.push_back("sample count");
  const int fd = ::open(src.c_str(), O_RDONLY);
  uint64_t offset = format::kHeaderBytes;
  for (uint64_t k = 0; k < handle->num_chunks() && fd >= 0; ++k) {
    Bytes header(12);
    if (::pread(fd, header.data(), 12, static_cast<off_t>(offset)) != 12) {
      problems.push_back("short read on source");
      break;
    }
    const auto& e = handle->manifest().chunk_index[k];
    if (oracle::Le<uint64_t>(header, 4) != e.checksum ||
        oracle::Le<uint32_t>(header, 0) + 12 != e.byte_length) {
      problems.push_back(Fmt("chunk %llu record differs",
                             static_cast<unsigned long long>(k)));
    }
    if (k % 9 == 0) {
      const uint64_t intra = (k * 2654435761u) % e.sample_count;
      Bytes want(g.sample_bytes);
      const auto got = ::pread(fd, want.data(), want.size(),
              static_cast<off_t>(offset + 12 + intra * g.sample_bytes));
      if (got != static_cast<ssize_t>(want.size()) || handle->GetSample(e.first_global_index + intra).payload != want) {
        problems.push_back("sample bytes differ");
      }
    }
    offset += 12 + oracle::Le<uint32_t>(header, 0);
  }
  if (fd >= 0) ::close(fd);
  const double s = Since(t0);
  if (src_bytes < kBigFileBytes) problems.push_back("source below 4 GiB");
  if (stats.peak_buffer_bytes > bound) problems.push_back("peak over bound");
  if (s > kConverterBudgetS) problems.push_back("over time budget");

  std::string detail = Fmt(
      "%.2f GiB stream file, %llu chunks of %llu MiB: peak chunk buffer %.1f "
      "MiB <= bound %.1f MiB (2 x chunk + %.1f KiB index)",
      src_bytes / double(1 << 30),
      static_cast<unsigned long long>(stats.manifest.chunk_index.size()),
      static_cast<unsigned long long>(chunk_bytes >> 20),
      stats.peak_buffer_bytes / double(1 << 20), bound / double(1 << 20),
      stats.index_bytes / 1024.0);
  if (rss_before && rss_after) {
    detail += Fmt("; process peak RSS during conversion %.1f MiB",
                  *rss_after / double(1 << 20));
  }
  detail += Fmt("; generate %.1f s, convert %.1f s, total %.1f s (budget %.0f s)",
                gen_s, convert_s, s, kConverterBudgetS);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

// --- 6 ---------------------------------------------------------------------------------

Outcome SpeedupProxy() {
  const auto t0 = Clock::now();
  oracle::TempDir dir("shufload-acc6");
  bench::GenOptions g;
  g.samples = 8192;
  g.sample_bytes = 64;
  g.samples_per_chunk = 16;
  const auto path = Gen(dir, "d.shi", g);
  bench::BenchConfig c;
  c.dataset_path = path;
  c.batch_size = 64;
  c.steps = 100;
  c.warmup_steps = 10;
  c.repeats = 3;
  c.inject_latency = std::chrono::milliseconds(1);
  c.generation = fetch::Generation::kOrdered;
  const auto ordered = bench::RunBench(c).back();
  c.generation = fetch::Generation::kUnordered;
  c.concurrency = 64;
  const auto unordered = bench::RunBench(c).back();
  const double ratio =
      unordered.samples_per_second / ordered.samples_per_second;
  const double s = Since(t0);
  const unsigned hw = std::thread::hardware_concurrency();
  std::string detail = Fmt(
      "loading-only, batch 64, 1 ms injected latency: unordered@64 %.0f "
      "samples/s vs ordered %.0f samples/s = %.1fx (floor %.0fx); peak "
      "in-flight fetches %llu; %u hardware thread(s); %.1f s (budget %.0f s)",
      unordered.samples_per_second, ordered.samples_per_second, ratio,
      kSpeedupFloor,
      static_cast<unsigned long long>(unordered.peak_in_flight_fetches), hw, s,
      kSpeedupBudgetS);
  if (hw < 8) detail += "; note: fewer than 8 hardware threads on this host";
  return {ratio >= kSpeedupFloor && s < kSpeedupBudgetS &&
              ordered.samples == unordered.samples,
          detail};
}

// --- 7 ---------------------------------------------------------------------------------

Outcome Degradation() {
  oracle::TempDir dir("shufload-acc7");
  const std::string csv = "acceptance_degradation.csv";
  std::filesystem::remove(csv);
  std::vector<bench::MetricsRecord> means;
  for (uint64_t n : {uint64_t{10000}, uint64_t{100000}, uint64_t{1000000}}) {
    bench::GenOptions g;
    g.samples = n;
    g.sample_bytes = 256;
    g.samples_per_chunk = 64;
    const auto path = Gen(dir, "d" + std::to_string(n) + ".shi", g);
    bench::BenchConfig c;
    c.dataset_path = path;
    c.mode = sampler::ShuffleMode::kIndicesMapping;
    c.generation = fetch::Generation::kOrdered;
    c.batch_size = 32;
    c.steps = 50;
    c.warmup_steps = 20;
    c.repeats = 3;
    c.inject_latency = std::chrono::microseconds(500);
    c.cache_chunks = 256;
    c.drop_os_cache = true;
    const auto rows = bench::RunBench(c);
    bench::AppendCsv(csv, rows);
    means.push_back(rows.back());
    std::filesystem::remove(path);
  }
  size_t aggregates = 0;
  for (const auto& r : bench::ReadCsv(csv)) aggregates += r.is_aggregate();
  bool monotone = true;
  for (size_t i = 1; i < means.size(); ++i) {
    monotone &= means[i].samples_per_second <= means[i - 1].samples_per_second;
  }
  return {monotone && aggregates == 3,
          Fmt("indices-mapping loading-only samples/s at 10^4 / 10^5 / 10^6 "
              "samples: %.0f / %.0f / %.0f (bounded 256-chunk cache, 500 us "
              "miss latency); CSV: %s",
              means[0].samples_per_second, means[1].samples_per_second,
              means[2].samples_per_second,
              std::filesystem::absolute(csv).c_str())};
}

// --- 8 ---------------------------------------------------------------------------------

Outcome ShuffleStatistics() {
  auto tally = [](auto&& make) {
    std::vector<uint64_t> counts(24);
    for (uint64_t t = 0; t < kChiTrials; ++t) {
      const auto p = make(t);
      ++counts[oracle::PermutationRank(p.data(), 4)];
    }
    return counts;
  };
  const double sigma =
      std::sqrt(kChiTrials * (1.0 / 24) * (23.0 / 24));
  auto within = [&](const std::vector<uint64_t>& c) {
    for (auto v : c) {
      if (std::abs(v - kChiTrials / 24.0) > 5 * sigma) return false;
    }
    return true;
  };
  const auto im = tally([](uint64_t t) { return sampler::MakePermutation(4, t, 0); });
  const auto b4 = tally([](uint64_t t) {
    return sampler::BufferedShuffleOrder(4, t, 4);
  });
  const auto b9 = tally([](uint64_t t) {
    return sampler::BufferedShuffleOrder(4, t, 9);
  });
  const double chi_im = oracle::ChiSquare(im);
  const double chi_b4 = oracle::ChiSquare(b4);
  const double chi_b9 = oracle::ChiSquare(b9);

  bool locality = true;
  uint64_t checked = 0;
  for (uint64_t b : {uint64_t{1}, uint64_t{2}, uint64_t{37}, uint64_t{1000},
                     uint64_t{65536}, uint64_t{200000}}) {
    for (uint64_t seed = 0; seed < 3; ++seed) {
      const auto out = sampler::BufferedShuffleOrder(100000, seed * 31 + b, b);
      std::vector<uint8_t> seen(100000);
      for (uint64_t k = 0; k < out.size(); ++k) {
        locality &= out[k] <= k + b - 1 && out[k] < 100000 && !seen[out[k]]++;
      }
      locality &= out.size() == 100000;
      ++checked;
    }
  }
  const bool pass = chi_im < oracle::kChi2Crit23At001 &&
                    chi_b4 < oracle::kChi2Crit23At001 &&
                    chi_b9 < oracle::kChi2Crit23At001 && within(im) &&
                    within(b4) && within(b9) && locality;
  return {pass,
          Fmt("chi-square (23 dof, %llu trials, critical %.3f at 0.001): "
              "indices-mapping %.2f, buffered b=4 %.2f, buffered b=9 (>= n) %.2f; "
              "locality out[k] <= k+b-1 %s on %llu orders of 10^5",
              static_cast<unsigned long long>(kChiTrials),
              oracle::kChi2Crit23At001, chi_im, chi_b4, chi_b9,
              locality ? "held" : "VIOLATED",
              static_cast<unsigned long long>(checked))};
}

// --- 9 ---------------------------------------------------------------------------------

Outcome GradientCheck() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  double worst = 0;
  for (int c = 0; c < 1000; ++c) {
    const size_t dim = 1 + rng() % 16;
    std::vector<double> theta(dim), x(dim);
    for (auto& v : theta) v = u(rng);
    for (auto& v : x) v = u(rng);
    const double y = u(rng);
    const auto analytic =
        trainer::PerSampleLossGrad(theta, trainer::SyntheticSample{x, y});
    const auto fd = oracle::CentralDifference(theta, x, y, 1e-5);
    double num = 0, den = 0;
    for (size_t i = 0; i < dim; ++i) {
      num += (analytic.grad[i] - fd[i]) * (analytic.grad[i] - fd[i]);
      den += analytic.grad[i] * analytic.grad[i];
    }
    const double rel = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    worst = std::max(worst, rel);
  }
  return {worst <= kGradTolerance,
          Fmt("1000 random cases (dim 1..16): worst ||analytic - central "
              "difference|| / ||analytic|| = %.3g (tolerance %.0e)",
              worst, kGradTolerance)};
}

// --- 10 --------------------------------------------------------------------------------

Outcome FaultHandling() {
  oracle::TempDir dir("shufload-acc10");
  std::vector<std::string> problems;
  bench::GenOptions g;
  g.samples = 2000;
  g.sample_bytes = 50;
  g.samples_per_chunk = 40;
  g.format = bench::DatasetFormat::kStream;
  const auto shs = Gen(dir, "d.shs", g);
  const std::string shi = dir / "d.shi";
  format::ConvertStreamToIndexable(shs, shi);
  const auto clean = oracle::ParseFile(oracle::ReadFile(shi)).samples;

  // Flipped byte: every read path blames the right chunk.
  uint64_t flips = 0;
  {
    auto h = format::DatasetHandle::Open(shi);
    for (uint64_t target : {uint64_t{0}, uint64_t{17}, uint64_t{49}}) {
      const std::string bad = dir / "flip.shi";
      std::filesystem::copy_file(shi, bad,
                                 std::filesystem::copy_options::overwrite_existing);
      const auto& e = h->manifest().chunk_index[target];
      oracle::FlipByte(bad, e.payload_offset() + 13);
      auto broken = format::DatasetHandle::Open(bad);
      try {
        broken->GetSample(e.first_global_index + 1);
        problems.push_back("flipped byte not detected by get_sample");
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kCorrupt || err.chunk() != target) {
          problems.push_back("get_sample blamed the wrong chunk");
        }
      }
      const auto report = bench::VerifyDataset(bad, std::nullopt);
      if (report.ok || report.failing_chunk != target) {
        problems.push_back("verify blamed the wrong chunk");
      }
      const std::string bad_stream = dir / "flip.shs";
      std::filesystem::copy_file(shs, bad_stream,
                                 std::filesystem::copy_options::overwrite_existing);
      oracle::FlipByte(bad_stream, e.payload_offset() + 13);
      try {
        format::ConvertStreamToIndexable(bad_stream, dir / "out.shi");
        problems.push_back("converter accepted a corrupt chunk");
      } catch (const Error& err) {
        if (err.chunk() != target) problems.push_back("converter wrong chunk");
      }
      // Neighbouring chunks still read fine.
      const uint64_t other = target == 0 ? 1 : 0;
      const auto& oe = h->manifest().chunk_index[other];
      if (broken->GetSample(oe.first_global_index).payload !=
          clean[oe.first_global_index]) {
        problems.push_back("corruption leaked into another chunk");
      }
      ++flips;
    }
  }

  // Truncated footer: every cut inside the footer is a clean open error.
  uint64_t cuts = 0;
  {
    const Bytes full = oracle::ReadFile(shi);
    const uint64_t footer = oracle::Le<uint64_t>(full, full.size() - 12) + 12;
    for (uint64_t cut = 1; cut <= footer; cut += 7) {
      oracle::WriteFile(dir / "cut.shi", Bytes(full.begin(), full.end() - cut));
      try {
        format::DatasetHandle::Open(dir / "cut.shi");
        problems.push_back(Fmt("cut of %llu bytes opened",
                               static_cast<unsigned long long>(cut)));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kFormat) problems.push_back("wrong error code");
      }
      ++cuts;
    }
  }

  // Mid-epoch failure: fail-fast cancels, later batches on the same handle work.
  uint64_t cancelled_fetches = 0;
  {
    auto h = format::DatasetHandle::Open(shi);
    const auto batches =
        sampler::MakeEpochPlan({sampler::ShuffleMode::kIndicesMapping, 4, 0, 1},
                               2000, 50, false)
            .Batches();
    const uint64_t bad_batch = 12;
    const uint64_t bad_index = batches[bad_batch].indices[20];
    std::atomic<uint64_t> calls{0};
    fetch::PreprocessFn fail = [&](uint64_t index, Bytes b) {
      ++calls;
      if (index == bad_index) throw Error(ErrorCode::kIo, "injected fetch failure");
      std::this_thread::sleep_for(std::chrono::microseconds(200));
      return b;
    };
    fetch::LoaderOptions options;
    options.fetch.max_concurrent_fetches = 4;
    options.fetch.prefetch_depth = 2;
    uint64_t yielded = 0;
    {
      fetch::EpochLoader loader(h, batches, options, fail);
      try {
        while (auto b = loader.Next()) {
          for (const auto& s : b->samples) {
            if (s.payload != clean[s.global_index]) problems.push_back("bad payload");
          }
          ++yielded;
        }
        problems.push_back("fail-fast loader did not raise");
      } catch (const Error& err) {
        if (err.sample() != bad_index) problems.push_back("wrong failing index");
      }
      if (loader.Next()) problems.push_back("stream continued after failure");
    }
    if (yielded != bad_batch) problems.push_back("wrong number of batches before failure");
    const uint64_t launched = (bad_batch + 1 + options.fetch.prefetch_depth) * 50;
    if (calls.load() >= launched) problems.push_back("outstanding work not cancelled");
    cancelled_fetches = launched - calls.load();

    std::vector<sampler::BatchSpec> rest(batches.begin() + bad_batch + 1, batches.end());
    fetch::EpochLoader resumed(h, rest, options);
    uint64_t ok_batches = 0;
    while (auto b = resumed.Next()) {
      for (const auto& s : b->samples) {
        if (s.payload != clean[s.global_index]) problems.push_back("bad resumed payload");
      }
      ++ok_batches;
    }
    if (ok_batches != rest.size()) problems.push_back("resumed batches missing");

    options.error_policy = fetch::ErrorPolicy::kSkipAndReport;
    fetch::EpochLoader skipping(h, batches, options, fail);
    uint64_t skipped_yield = 0;
    while (auto b = skipping.Next()) ++skipped_yield;
    if (skipped_yield != batches.size() - 1 || skipping.failures().size() != 1 ||
        skipping.failures()[0].batch_ordinal != bad_batch) {
      problems.push_back("skip-and-report mismatch");
    }
  }

  std::string detail =
      Fmt("flipped byte -> checksum error at the right chunk (%llu targets, "
          "get_sample/verify/convert); %llu footer truncations -> clean open "
          "error; injected failure in batch 12 -> fail-fast with %llu fetches "
          "cancelled, following batches on the same handle correct, "
          "skip-and-report yields the other 39",
          static_cast<unsigned long long>(flips),
          static_cast<unsigned long long>(cuts),
          static_cast<unsigned long long>(cancelled_fetches));
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "epoch coverage", Coverage},
      {2, "order invariance", OrderInvariance},
      {3, "format round trip", RoundTrip},
      {4, "footer-only open", OpenCost},
      {5, "converter memory", ConverterMemory},
      {6, "concurrency speedup", SpeedupProxy},
      {7, "degradation trend", Degradation},
      {8, "shuffle statistics", ShuffleStatistics},
      {9, "gradient check", GradientCheck},
      {10, "fault handling", FaultHandling},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
      continue;
    }
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %-20s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
