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
// Reference implementations the tests check the library against. None of
// this calls into the library.

#ifndef SHUFLOAD_TESTS_ORACLES_HPP_
#define SHUFLOAD_TESTS_ORACLES_HPP_

#include <unistd.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

using Bytes = std::vector<uint8_t>;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "shufload") {
    std::string pattern =
        (std::filesystem::temp_directory_path() / (tag + "-XXXXXX")).string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string operator/(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Bytes ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

inline void WriteFile(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path);
}

inline void FlipByte(const std::string& path, uint64_t offset) {
  Bytes b = ReadFile(path);
  b.at(offset) ^= 0x5a;
  WriteFile(path, b);
}

inline uint64_t Fnv(const uint8_t* p, size_t n) {
  uint64_t h = 14695981039346656037ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
T Le(const Bytes& b, size_t at) {
  if (at + sizeof(T) > b.size()) throw std::runtime_error("short read");
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<T>(b[at + i]) << (8 * i));
  }
  return v;
}

// Byte-level reader written directly from the on-disk layout.
struct ParsedFile {
  uint8_t layout = 0;
  uint8_t encoding = 0;
  uint32_t fixed_bytes = 0;
  uint32_t samples_per_chunk = 0;
  uint64_t total_samples = 0;
  uint64_t total_chunks = 0;
  std::vector<uint64_t> chunk_offsets;
  std::vector<uint64_t> chunk_first;
  std::vector<Bytes> samples;
};

inline ParsedFile ParseFile(const Bytes& b) {
  if (b.size() < 32 || std::memcmp(b.data(), "SHFD", 4) != 0) {
    throw std::runtime_error("bad magic");
  }
  ParsedFile f;
  f.layout = b[6];
  f.encoding = b[7];
  f.fixed_bytes = Le<uint32_t>(b, 8);
  f.samples_per_chunk = Le<uint32_t>(b, 12);
  f.total_samples = Le<uint64_t>(b, 16);
  f.total_chunks = Le<uint64_t>(b, 24);
  size_t at = 32;
  for (;;) {
    const uint32_t len = Le<uint32_t>(b, at);
    const uint64_t sum = Le<uint64_t>(b, at + 4);
    if (len == 0) break;
    if (at + 12 + len > b.size()) throw std::runtime_error("truncated chunk");
    const uint8_t* p = b.data() + at + 12;
    if (Fnv(p, len) != sum) throw std::runtime_error("checksum");
    f.chunk_offsets.push_back(at);
    f.chunk_first.push_back(f.samples.size());
    if (f.encoding == 0) {
      if (f.fixed_bytes == 0 || len % f.fixed_bytes != 0) {
        throw std::runtime_error("ragged fixed chunk");
      }
      for (size_t k = 0; k < len; k += f.fixed_bytes) {
        f.samples.emplace_back(p + k, p + k + f.fixed_bytes);
      }
    } else {
      size_t k = 0;
      while (k < len) {
        Bytes lenbuf(p + k, p + k + 4);
        const uint32_t n = Le<uint32_t>(lenbuf, 0);
        k += 4;
        f.samples.emplace_back(p + k, p + k + n);
        k += n;
      }
    }
    at += 12 + len;
  }
  return f;
}

inline std::vector<Bytes> RandomPayloads(std::mt19937_64& rng, size_t n,
                                         size_t max_bytes, bool variable) {
  std::vector<Bytes> out(n);
  std::uniform_int_distribution<size_t> size_dist(0, max_bytes);
  for (auto& s : out) {
    s.resize(variable ? size_dist(rng) : max_bytes);
    for (auto& c : s) c = static_cast<uint8_t>(rng());
  }
  return out;
}

// Lehmer rank of a permutation of {0..n-1}, in [0, n!).
inline size_t PermutationRank(const uint64_t* p, size_t n) {
  size_t rank = 0;
  for (size_t i = 0; i < n; ++i) {
    size_t smaller = 0;
    for (size_t j = i + 1; j < n; ++j) smaller += p[j] < p[i];
    rank = rank * (n - i) + smaller;
  }
  return rank;
}

inline double ChiSquare(const std::vector<uint64_t>& counts) {
  uint64_t total = 0;
  for (auto c : counts) total += c;
  const double expected = static_cast<double>(total) / counts.size();
  double chi = 0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi += d * d / expected;
  }
  return chi;
}

// Upper 0.001 quantile of chi-square with 23 degrees of freedom.
inline constexpr double kChi2Crit23At001 = 49.7282324664315;

// (theta . x - y)^2 evaluated directly.
inline double SquaredLoss(const std::vector<double>& theta,
                          const std::vector<double>& x, double y) {
  double r = -y;
  for (size_t i = 0; i < theta.size(); ++i) r += theta[i] * x[i];
  return r * r;
}

inline std::vector<double> CentralDifference(const std::vector<double>& theta,
                                             const std::vector<double>& x,
                                             double y, double h) {
  std::vector<double> g(theta.size());
  for (size_t i = 0; i < theta.size(); ++i) {
    auto plus = theta;
    auto minus = theta;
    plus[i] += h;
    minus[i] -= h;
    g[i] = (SquaredLoss(plus, x, y) - SquaredLoss(minus, x, y)) / (2 * h);
  }
  return g;
}

}  // namespace oracle

#endif  // SHUFLOAD_TESTS_ORACLES_HPP_
