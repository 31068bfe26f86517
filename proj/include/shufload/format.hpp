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
// On-disk dataset containers.
//
// Two layouts share one header and one chunk record encoding:
//
//   stream:     header | chunk record* | end marker
//   indexable:  header | chunk record* | end marker | index entry* |
//               u64 footer length | "DFHS"
//
// The stream layout can only be iterated front to back. The indexable layout
// carries a footer chunk index so that a reader can open it by touching only
// the header and the footer, and can fetch any chunk with one positional read.
// See docs/FORMAT.md for the bit-exact layout.
#ifndef SHUFLOAD_FORMAT_HPP_
#define SHUFLOAD_FORMAT_HPP_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shufload/error.hpp"

namespace shufload::format {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

inline constexpr uint8_t kLeadingMagic[4] = {'S', 'H', 'F', 'D'};
inline constexpr uint8_t kTrailingMagic[4] = {'D', 'F', 'H', 'S'};
inline constexpr uint16_t kFormatVersion = 1;

inline constexpr uint64_t kHeaderBytes = 32;
inline constexpr uint64_t kChunkRecordHeaderBytes = 12;  // u32 len + u64 sum
inline constexpr uint64_t kIndexEntryBytes = 40;
inline constexpr uint64_t kTrailerBytes = 12;  // u64 footer len + magic

// Header value of total_samples / total_chunks while a writer is still open.
inline constexpr uint64_t kUnknownCount = ~uint64_t{0};

inline constexpr uint64_t kDefaultChunkBytes = uint64_t{64} << 20;

uint64_t Fnv1a64(ByteView data);

enum class Layout : uint8_t { kStream = 0, kIndexable = 1 };
enum class SampleEncoding : uint8_t { kFixedSize = 0, kLengthPrefixed = 1 };

struct SchemaDescriptor {
  uint16_t format_version = kFormatVersion;
  Layout layout = Layout::kStream;
  SampleEncoding sample_encoding = SampleEncoding::kFixedSize;
  uint32_t fixed_sample_bytes = 0;  // fixed_size only
  uint32_t samples_per_chunk = 1;
  uint64_t total_samples = 0;
  uint64_t total_chunks = 0;

  bool counts_known() const {
    return total_samples != kUnknownCount && total_chunks != kUnknownCount;
  }
};

struct ChunkIndexEntry {
  uint64_t chunk_ordinal = 0;
  uint64_t byte_offset = 0;  // start of the chunk record
  uint32_t byte_length = 0;  // record header + payload
  uint32_t sample_count = 0;
  uint64_t first_global_index = 0;
  uint64_t checksum = 0;  // FNV-1a 64 of the payload

  uint64_t payload_offset() const {
    return byte_offset + kChunkRecordHeaderBytes;
  }
  uint64_t payload_length() const {
    return byte_length - kChunkRecordHeaderBytes;
  }
  bool operator==(const ChunkIndexEntry&) const = default;
};

struct DatasetManifest {
  SchemaDescriptor schema;
  std::vector<ChunkIndexEntry> chunk_index;

  // Throws Error(kFormat) naming the first violated invariant.
  void Validate() const;

  // Chunk containing `global_index` (binary search on first_global_index).
  // Throws Error(kIndex) when out of range.
  uint64_t ChunkOf(uint64_t global_index) const;
};

struct SampleRecord {
  uint64_t global_index = 0;
  Bytes payload;

  bool operator==(const SampleRecord&) const = default;
};

struct ChunkingOptions {
  SampleEncoding encoding = SampleEncoding::kLengthPrefixed;
  uint32_t fixed_sample_bytes = 0;
  uint32_t samples_per_chunk = 1;

  static ChunkingOptions Fixed(uint32_t sample_bytes,
                               uint32_t samples_per_chunk);
  static ChunkingOptions LengthPrefixed(uint32_t samples_per_chunk);
};

// Samples per chunk so that a chunk of fixed-size samples is close to
// kDefaultChunkBytes.
uint32_t DefaultSamplesPerChunk(uint32_t fixed_sample_bytes);

uint64_t CeilDiv(uint64_t a, uint64_t b);

// --- Sample codec for one chunk payload -------------------------------------

// Number of samples in `payload`; throws Error(kCorrupt) if the payload is
// not a whole number of samples under `schema`.
uint32_t CountSamples(const SchemaDescriptor& schema, ByteView payload);

std::vector<SampleRecord> DecodeChunk(const SchemaDescriptor& schema,
                                      ByteView payload,
                                      uint64_t first_global_index);

// Extracts sample `intra_index` only. For length_prefixed, walks the chunk.
Bytes ExtractSample(const SchemaDescriptor& schema, ByteView payload,
                    uint32_t intra_index);

// --- Sinks --------------------------------------------------------------------

class Sink {
 public:
  virtual ~Sink() = default;
  virtual void Write(ByteView data) = 0;
  virtual void WriteAt(uint64_t offset, ByteView data) = 0;
  virtual void Close() = 0;
};

class FileSink final : public Sink {
 public:
  explicit FileSink(const std::string& path);
  ~FileSink() override;
  FileSink(const FileSink&) = delete;
  FileSink& operator=(const FileSink&) = delete;

  void Write(ByteView data) override;
  void WriteAt(uint64_t offset, ByteView data) override;
  void Close() override;

 private:
  void FlushBuffer();

  std::string path_;
  int fd_ = -1;
  Bytes buffer_;
};

class MemorySink final : public Sink {
 public:
  void Write(ByteView data) override;
  void WriteAt(uint64_t offset, ByteView data) override;
  void Close() override {}

  const Bytes& bytes() const { return bytes_; }

 private:
  Bytes bytes_;
};

// --- Writers --------------------------------------------------------------------

struct WriteStats {
  uint64_t samples_written = 0;
  uint64_t chunks_written = 0;
  uint64_t bytes_written = 0;
};

// Single-owner incremental writer for either layout. The header is written
// with unknown counts first and patched by Finish(); a file whose writer
// failed or was abandoned has no end marker and is rejected by readers.
class DatasetWriter {
 public:
  DatasetWriter(Sink& sink, Layout layout, const ChunkingOptions& chunking);
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void Append(ByteView payload);

  // Appends an already encoded chunk payload holding `sample_count` samples.
  // Any partially filled chunk from Append() is flushed first.
  void AppendEncodedChunk(ByteView payload, uint32_t sample_count);

  DatasetManifest Finish();

  const WriteStats& stats() const { return stats_; }
  uint64_t index_bytes() const {
    return index_.size() * sizeof(ChunkIndexEntry);
  }

 private:
  void FlushPending();
  void EmitChunk(ByteView payload, uint32_t sample_count);
  void Emit(ByteView data);
  [[noreturn]] void Abort(const std::exception& cause);

  Sink& sink_;
  SchemaDescriptor schema_;
  Bytes pending_;
  uint32_t pending_count_ = 0;
  std::vector<ChunkIndexEntry> index_;
  WriteStats stats_;
  bool finished_ = false;
};

WriteStats WriteStreamDataset(std::span<const Bytes> samples, Sink& sink,
                              const ChunkingOptions& chunking);

DatasetManifest WriteIndexableDataset(std::span<const Bytes> samples,
                                      Sink& sink,
                                      const ChunkingOptions& chunking);

// --- Sequential reader ------------------------------------------------------------

struct RawChunk {
  uint64_t ordinal = 0;
  uint64_t byte_offset = 0;
  uint64_t first_global_index = 0;
  uint32_t sample_count = 0;
  uint64_t checksum = 0;
  Bytes payload;
};

// Tracks bytes held in chunk buffers; `peak()` is the high-water mark.
class BufferMeter {
 public:
  void Acquire(uint64_t bytes);
  void Release(uint64_t bytes);
  uint64_t current() const { return current_; }
  uint64_t peak() const { return peak_; }

 private:
  uint64_t current_ = 0;
  uint64_t peak_ = 0;
};

// Forward iteration over a stream or indexable file. Chunks are read in file
// order and verified against their checksum; the footer of an indexable file
// is never read.
class StreamIterator {
 public:
  explicit StreamIterator(const std::string& path,
                          BufferMeter* meter = nullptr);
  ~StreamIterator();
  StreamIterator(const StreamIterator&) = delete;
  StreamIterator& operator=(const StreamIterator&) = delete;

  const SchemaDescriptor& schema() const { return schema_; }

  // Next chunk, or false at the end marker. The payload buffer is reused.
  bool NextChunk(RawChunk& chunk);

  std::optional<SampleRecord> Next();

  uint64_t bytes_consumed() const { return offset_; }

 private:
  void ReadExact(uint8_t* out, uint64_t n, const char* what);
  void ResizeBuffer(Bytes& buffer, uint64_t size);

  std::string path_;
  int fd_ = -1;
  BufferMeter* meter_;
  SchemaDescriptor schema_;
  uint64_t offset_ = 0;
  uint64_t next_ordinal_ = 0;
  uint64_t next_global_ = 0;
  bool done_ = false;

  // Sample-level cursor state.
  RawChunk current_;
  std::vector<SampleRecord> decoded_;
  size_t decoded_pos_ = 0;
};

std::vector<SampleRecord> ReadAllSamples(const std::string& path);

// --- Conversion ---------------------------------------------------------------------

struct ConversionStats {
  DatasetManifest manifest;
  uint64_t peak_buffer_bytes = 0;  // high-water mark of chunk buffers
  uint64_t largest_chunk_bytes = 0;
  uint64_t index_bytes = 0;
  uint64_t bytes_written = 0;
};

// Streams `source` into an indexable file chunk by chunk. Only the current
// chunk payload plus the chunk index are held in memory.
ConversionStats ConvertStreamToIndexable(const std::string& source,
                                         Sink& destination);
ConversionStats ConvertStreamToIndexable(const std::string& source,
                                         const std::string& destination);

// --- Random access ------------------------------------------------------------------

struct OpenOptions {
  // Most-recently-used decoded chunk cache per handle; 0 disables it.
  size_t cache_chunks = 0;
  // Ask the OS to drop cached pages of the file and to expect random access.
  bool drop_os_cache = false;
};

struct ReadOptions {
  // Added to every chunk read that reaches the file (cache misses only).
  std::chrono::microseconds injected_latency{0};
};

struct ReadTimings {
  int64_t index_lookup_ns = 0;
  int64_t read_ns = 0;
  int64_t decode_ns = 0;
};

struct IoCounters {
  uint64_t bytes_read = 0;
  uint64_t chunk_reads = 0;
  uint64_t cache_hits = 0;
};

// Opened indexable dataset. All reads are positional, so one handle can be
// shared by any number of concurrent readers.
class DatasetHandle {
 public:
  static std::shared_ptr<DatasetHandle> Open(const std::string& path,
                                             const OpenOptions& options = {});
  ~DatasetHandle();
  DatasetHandle(const DatasetHandle&) = delete;
  DatasetHandle& operator=(const DatasetHandle&) = delete;

  const DatasetManifest& manifest() const { return manifest_; }
  const SchemaDescriptor& schema() const { return manifest_.schema; }
  uint64_t num_samples() const { return manifest_.schema.total_samples; }
  uint64_t num_chunks() const { return manifest_.chunk_index.size(); }
  const std::string& path() const { return path_; }

  // Bytes read while opening: header, trailer and footer only.
  uint64_t open_bytes_read() const { return open_bytes_read_; }

  std::vector<SampleRecord> GetChunk(uint64_t chunk_ordinal,
                                     const ReadOptions& options = {}) const;

  SampleRecord GetSample(uint64_t global_index,
                         const ReadOptions& options = {},
                         ReadTimings* timings = nullptr) const;

  // Reads and checksums the chunk payload, bypassing the cache.
  Bytes ReadChunkPayload(uint64_t chunk_ordinal) const;

  IoCounters counters() const;

 private:
  DatasetHandle(std::string path, int fd, const OpenOptions& options);

  std::shared_ptr<const Bytes> LoadPayload(uint64_t chunk_ordinal,
                                           const ReadOptions& options) const;
  void PositionalRead(uint64_t offset, uint8_t* out, uint64_t n) const;

  std::string path_;
  int fd_ = -1;
  DatasetManifest manifest_;
  uint64_t open_bytes_read_ = 0;

  mutable std::atomic<uint64_t> bytes_read_{0};
  mutable std::atomic<uint64_t> chunk_reads_{0};
  mutable std::atomic<uint64_t> cache_hits_{0};

  // MRU chunk cache, guarded by cache_mutex_.
  size_t cache_capacity_ = 0;
  mutable std::mutex cache_mutex_;
  mutable std::list<std::pair<uint64_t, std::shared_ptr<const Bytes>>>
      cache_lru_;
  mutable std::unordered_map<
      uint64_t,
      std::list<std::pair<uint64_t, std::shared_ptr<const Bytes>>>::iterator>
      cache_map_;
};

// Reads the header of any shufload file.
SchemaDescriptor ReadHeader(const std::string& path);

}  // namespace shufload::format

#endif  // SHUFLOAD_FORMAT_HPP_
