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
#include "shufload/format.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <sys/uio.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <thread>

#include "byte_io.hpp"

namespace shufload::format {
namespace {

using internal::LoadLe;
using internal::PutLe;
using internal::StoreLe;

constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr size_t kSinkBufferBytes = size_t{1} << 20;

std::string ErrnoText() { return std::strerror(errno); }

Bytes EncodeHeader(const SchemaDescriptor& schema) {
  Bytes out;
  out.reserve(kHeaderBytes);
  out.insert(out.end(), std::begin(kLeadingMagic), std::end(kLeadingMagic));
  PutLe<uint16_t>(out, schema.format_version);
  PutLe<uint8_t>(out, static_cast<uint8_t>(schema.layout));
  PutLe<uint8_t>(out, static_cast<uint8_t>(schema.sample_encoding));
  PutLe<uint32_t>(out, schema.fixed_sample_bytes);
  PutLe<uint32_t>(out, schema.samples_per_chunk);
  PutLe<uint64_t>(out, schema.total_samples);
  PutLe<uint64_t>(out, schema.total_chunks);
  return out;
}

SchemaDescriptor ParseHeader(const uint8_t* in, const std::string& origin) {
  if (std::memcmp(in, kLeadingMagic, sizeof kLeadingMagic) != 0) {
    throw Error(ErrorCode::kFormat, origin + ": not a shufload dataset");
  }
  SchemaDescriptor schema;
  schema.format_version = LoadLe<uint16_t>(in + 4);
  if (schema.format_version != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                origin + ": unsupported format version " +
                    std::to_string(schema.format_version));
  }
  const uint8_t layout = in[6];
  const uint8_t encoding = in[7];
  if (layout > 1 || encoding > 1) {
    throw Error(ErrorCode::kFormat, origin + ": invalid schema block");
  }
  schema.layout = static_cast<Layout>(layout);
  schema.sample_encoding = static_cast<SampleEncoding>(encoding);
  schema.fixed_sample_bytes = LoadLe<uint32_t>(in + 8);
  schema.samples_per_chunk = LoadLe<uint32_t>(in + 12);
  schema.total_samples = LoadLe<uint64_t>(in + 16);
  schema.total_chunks = LoadLe<uint64_t>(in + 24);
  if (schema.samples_per_chunk == 0 ||
      (schema.sample_encoding == SampleEncoding::kFixedSize &&
       schema.fixed_sample_bytes == 0)) {
    throw Error(ErrorCode::kFormat, origin + ": invalid schema block");
  }
  return schema;
}

void EncodeIndexEntry(uint8_t* out, const ChunkIndexEntry& e) {
  StoreLe<uint64_t>(out, e.chunk_ordinal);
  StoreLe<uint64_t>(out + 8, e.byte_offset);
  StoreLe<uint32_t>(out + 16, e.byte_length);
  StoreLe<uint32_t>(out + 20, e.sample_count);
  StoreLe<uint64_t>(out + 24, e.first_global_index);
  StoreLe<uint64_t>(out + 32, e.checksum);
}

ChunkIndexEntry DecodeIndexEntry(const uint8_t* in) {
  ChunkIndexEntry e;
  e.chunk_ordinal = LoadLe<uint64_t>(in);
  e.byte_offset = LoadLe<uint64_t>(in + 8);
  e.byte_length = LoadLe<uint32_t>(in + 16);
  e.sample_count = LoadLe<uint32_t>(in + 20);
  e.first_global_index = LoadLe<uint64_t>(in + 24);
  e.checksum = LoadLe<uint64_t>(in + 32);
  return e;
}

Error CorruptChunk(uint64_t ordinal, const std::string& what) {
  Error err(ErrorCode::kCorrupt,
            "chunk " + std::to_string(ordinal) + ": " + what);
  err.WithChunk(ordinal);
  return err;
}

// Reads exactly n bytes at offset; returns bytes actually read (short on EOF).
uint64_t PreadFully(int fd, uint64_t offset, uint8_t* out, uint64_t n) {
  uint64_t done = 0;
  while (done < n) {
    const ssize_t got = ::pread(fd, out + done, n - done,
                                static_cast<off_t>(offset + done));
    if (got < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, "read failed: " + ErrnoText());
    }
    if (got == 0) break;
    done += static_cast<uint64_t>(got);
  }
  return done;
}

}  // namespace

uint64_t Fnv1a64(ByteView data) {
  uint64_t h = kFnvOffsetBasis;
  for (const uint8_t b : data) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

uint64_t CeilDiv(uint64_t a, uint64_t b) { return a == 0 ? 0 : 1 + (a - 1) / b; }

ChunkingOptions ChunkingOptions::Fixed(uint32_t sample_bytes,
                                       uint32_t samples_per_chunk) {
  return {SampleEncoding::kFixedSize, sample_bytes, samples_per_chunk};
}

ChunkingOptions ChunkingOptions::LengthPrefixed(uint32_t samples_per_chunk) {
  return {SampleEncoding::kLengthPrefixed, 0, samples_per_chunk};
}

uint32_t DefaultSamplesPerChunk(uint32_t fixed_sample_bytes) {
  if (fixed_sample_bytes == 0) return 1;
  return static_cast<uint32_t>(
      std::max<uint64_t>(1, kDefaultChunkBytes / fixed_sample_bytes));
}

// --- Manifest -----------------------------------------------------------------------

void DatasetManifest::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kFormat, "invalid manifest: " + what);
  };
  if (schema.samples_per_chunk < 1) fail("samples_per_chunk < 1");
  if (!schema.counts_known()) fail("sample counts not finalized");
  if (schema.total_chunks !=
      CeilDiv(schema.total_samples, schema.samples_per_chunk)) {
    fail("total_chunks != ceil(total_samples / samples_per_chunk)");
  }
  if (chunk_index.size() != schema.total_chunks) {
    fail("chunk index length != total_chunks");
  }
  uint64_t expected_first = 0;
  uint64_t min_offset = kHeaderBytes;
  for (size_t k = 0; k < chunk_index.size(); ++k) {
    const ChunkIndexEntry& e = chunk_index[k];
    const std::string at = "chunk " + std::to_string(k) + ": ";
    if (e.chunk_ordinal != k) fail(at + "ordinal out of sequence");
    if (e.byte_offset < min_offset) fail(at + "offset overlaps previous");
    if (e.byte_length <= kChunkRecordHeaderBytes) fail(at + "empty record");
    if (e.sample_count < 1 || e.sample_count > schema.samples_per_chunk) {
      fail(at + "sample_count outside [1, samples_per_chunk]");
    }
    if (k + 1 < chunk_index.size() &&
        e.sample_count != schema.samples_per_chunk) {
      fail(at + "only the last chunk may be partial");
    }
    if (e.first_global_index != expected_first) {
      fail(at + "first_global_index != preceding sample total");
    }
    if (schema.sample_encoding == SampleEncoding::kFixedSize &&
        e.payload_length() !=
            uint64_t{e.sample_count} * schema.fixed_sample_bytes) {
      fail(at + "length disagrees with fixed sample size");
    }
    expected_first += e.sample_count;
    min_offset = e.byte_offset + e.byte_length;
  }
  if (expected_first != schema.total_samples) {
    fail("chunk sample counts do not sum to total_samples");
  }
}

uint64_t DatasetManifest::ChunkOf(uint64_t global_index) const {
  if (global_index >= schema.total_samples) {
    Error err(ErrorCode::kIndex, "sample index " +
                                     std::to_string(global_index) +
                                     " out of range [0, " +
                                     std::to_string(schema.total_samples) +
                                     ")");
    err.WithSample(global_index);
    throw err;
  }
  auto it = std::upper_bound(
      chunk_index.begin(), chunk_index.end(), global_index,
      [](uint64_t g, const ChunkIndexEntry& e) {
        return g < e.first_global_index;
      });
  return static_cast<uint64_t>(std::distance(chunk_index.begin(), it)) - 1;
}

// --- Chunk payload codec --------------------------------------------------------------

uint32_t CountSamples(const SchemaDescriptor& schema, ByteView payload) {
  if (schema.sample_encoding == SampleEncoding::kFixedSize) {
    if (payload.empty() || payload.size() % schema.fixed_sample_bytes != 0) {
      throw Error(ErrorCode::kCorrupt,
                  "payload is not a whole number of fixed-size samples");
    }
    return static_cast<uint32_t>(payload.size() / schema.fixed_sample_bytes);
  }
  uint64_t pos = 0;
  uint32_t count = 0;
  while (pos < payload.size()) {
    if (payload.size() - pos < 4) {
      throw Error(ErrorCode::kCorrupt, "truncated sample length prefix");
    }
    const uint32_t len = LoadLe<uint32_t>(payload.data() + pos);
    pos += 4;
    if (payload.size() - pos < len) {
      throw Error(ErrorCode::kCorrupt, "sample overruns chunk payload");
    }
    pos += len;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kCorrupt, "empty chunk payload");
  return count;
}

std::vector<SampleRecord> DecodeChunk(const SchemaDescriptor& schema,
                                      ByteView payload,
                                      uint64_t first_global_index) {
  const uint32_t count = CountSamples(schema, payload);
  std::vector<SampleRecord> out;
  out.reserve(count);
  if (schema.sample_encoding == SampleEncoding::kFixedSize) {
    const size_t width = schema.fixed_sample_bytes;
    for (uint32_t k = 0; k < count; ++k) {
      const uint8_t* p = payload.data() + k * width;
      out.push_back({first_global_index + k, Bytes(p, p + width)});
    }
    return out;
  }
  uint64_t pos = 0;
  for (uint32_t k = 0; k < count; ++k) {
    const uint32_t len = LoadLe<uint32_t>(payload.data() + pos);
    const uint8_t* p = payload.data() + pos + 4;
    out.push_back({first_global_index + k, Bytes(p, p + len)});
    pos += 4 + len;
  }
  return out;
}

Bytes ExtractSample(const SchemaDescriptor& schema, ByteView payload,
                    uint32_t intra_index) {
  if (schema.sample_encoding == SampleEncoding::kFixedSize) {
    const uint64_t width = schema.fixed_sample_bytes;
    if ((uint64_t{intra_index} + 1) * width > payload.size()) {
      throw Error(ErrorCode::kCorrupt, "sample beyond end of chunk payload");
    }
    const uint8_t* p = payload.data() + intra_index * width;
    return Bytes(p, p + width);
  }
  uint64_t pos = 0;
  for (uint32_t k = 0;; ++k) {
    if (payload.size() - pos < 4) {
      throw Error(ErrorCode::kCorrupt, "sample beyond end of chunk payload");
    }
    const uint32_t len = LoadLe<uint32_t>(payload.data() + pos);
    if (payload.size() - pos - 4 < len) {
      throw Error(ErrorCode::kCorrupt, "sample overruns chunk payload");
    }
    if (k == intra_index) {
      const uint8_t* p = payload.data() + pos + 4;
      return Bytes(p, p + len);
    }
    pos += 4 + len;
  }
}

// --- Sinks ------------------------------------------------------------------------------

FileSink::FileSink(const std::string& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::kIo, "cannot create " + path + ": " + ErrnoText());
  }
  buffer_.reserve(kSinkBufferBytes);
}

FileSink::~FileSink() {
  if (fd_ >= 0) ::close(fd_);
}

void FileSink::FlushBuffer() {
  const uint8_t* p = buffer_.data();
  size_t left = buffer_.size();
  while (left > 0) {
    const ssize_t n = ::write(fd_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, "write to " + path_ + " failed: " +
                                      ErrnoText());
    }
    p += n;
    left -= static_cast<size_t>(n);
  }
  buffer_.clear();
}

void FileSink::Write(ByteView data) {
  if (fd_ < 0) throw Error(ErrorCode::kIo, path_ + ": sink is closed");
  if (buffer_.size() + data.size() > kSinkBufferBytes) FlushBuffer();
  if (data.size() >= kSinkBufferBytes) {
    // Large payloads bypass the staging buffer.
    const uint8_t* p = data.data();
    size_t left = data.size();
    while (left > 0) {
      const ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kIo, "write to " + path_ + " failed: " +
                                        ErrnoText());
      }
      p += n;
      left -= static_cast<size_t>(n);
    }
    return;
  }
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

void FileSink::WriteAt(uint64_t offset, ByteView data) {
  if (fd_ < 0) throw Error(ErrorCode::kIo, path_ + ": sink is closed");
  FlushBuffer();
  uint64_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::pwrite(fd_, data.data() + done, data.size() - done,
                               static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, "write to " + path_ + " failed: " +
                                      ErrnoText());
    }
    done += static_cast<uint64_t>(n);
  }
}

void FileSink::Close() {
  if (fd_ < 0) return;
  FlushBuffer();
  const int rc = ::close(fd_);
  fd_ = -1;
  if (rc != 0) {
    throw Error(ErrorCode::kIo, "close of " + path_ + " failed: " +
                                    ErrnoText());
  }
}

void MemorySink::Write(ByteView data) {
  bytes_.insert(bytes_.end(), data.begin(), data.end());
}

void MemorySink::WriteAt(uint64_t offset, ByteView data) {
  if (offset + data.size() > bytes_.size()) bytes_.resize(offset + data.size());
  std::copy(data.begin(), data.end(), bytes_.begin() + offset);
}

// --- Writer ----------------------------------------------------------------------------

DatasetWriter::DatasetWriter(Sink& sink, Layout layout,
                             const ChunkingOptions& chunking)
    : sink_(sink) {
  if (chunking.samples_per_chunk < 1) {
    throw Error(ErrorCode::kInvalidArgument, "samples_per_chunk must be >= 1");
  }
  if (chunking.encoding == SampleEncoding::kFixedSize &&
      chunking.fixed_sample_bytes == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "fixed_size encoding needs fixed_sample_bytes >= 1");
  }
  schema_.layout = layout;
  schema_.sample_encoding = chunking.encoding;
  schema_.fixed_sample_bytes =
      chunking.encoding == SampleEncoding::kFixedSize
          ? chunking.fixed_sample_bytes
          : 0;
  schema_.samples_per_chunk = chunking.samples_per_chunk;
  schema_.total_samples = kUnknownCount;
  schema_.total_chunks = kUnknownCount;
  Emit(EncodeHeader(schema_));
}

void DatasetWriter::Abort(const std::exception& cause) {
  finished_ = true;
  throw Error(ErrorCode::kAbortedFile,
              std::string("dataset write aborted: ") + cause.what());
}

void DatasetWriter::Emit(ByteView data) {
  try {
    sink_.Write(data);
  } catch (const std::exception& e) {
    Abort(e);
  }
  stats_.bytes_written += data.size();
}

void DatasetWriter::Append(ByteView payload) {
  if (finished_) throw Error(ErrorCode::kInvalidArgument, "writer finished");
  if (schema_.sample_encoding == SampleEncoding::kFixedSize) {
    if (payload.size() != schema_.fixed_sample_bytes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample of " + std::to_string(payload.size()) +
                      " bytes in a fixed_size dataset of " +
                      std::to_string(schema_.fixed_sample_bytes));
    }
  } else {
    if (payload.size() > UINT32_MAX) {
      throw Error(ErrorCode::kInvalidArgument, "sample exceeds 4 GiB");
    }
    PutLe<uint32_t>(pending_, static_cast<uint32_t>(payload.size()));
  }
  pending_.insert(pending_.end(), payload.begin(), payload.end());
  if (++pending_count_ == schema_.samples_per_chunk) FlushPending();
}

void DatasetWriter::FlushPending() {
  if (pending_count_ == 0) return;
  EmitChunk(pending_, pending_count_);
  pending_.clear();
  pending_count_ = 0;
}

void DatasetWriter::AppendEncodedChunk(ByteView payload,
                                       uint32_t sample_count) {
  if (finished_) throw Error(ErrorCode::kInvalidArgument, "writer finished");
  if (sample_count < 1 || sample_count > schema_.samples_per_chunk) {
    throw Error(ErrorCode::kInvalidArgument,
                "encoded chunk sample_count outside [1, samples_per_chunk]");
  }
  FlushPending();
  EmitChunk(payload, sample_count);
}

void DatasetWriter::EmitChunk(ByteView payload, uint32_t sample_count) {
  if (payload.size() + kChunkRecordHeaderBytes > UINT32_MAX) {
    throw Error(ErrorCode::kInvalidArgument, "chunk record exceeds 4 GiB");
  }
  ChunkIndexEntry entry;
  entry.chunk_ordinal = index_.size();
  entry.byte_offset = stats_.bytes_written;
  entry.byte_length =
      static_cast<uint32_t>(payload.size() + kChunkRecordHeaderBytes);
  entry.sample_count = sample_count;
  entry.first_global_index = stats_.samples_written;
  entry.checksum = Fnv1a64(payload);

  uint8_t record_header[kChunkRecordHeaderBytes];
  StoreLe<uint32_t>(record_header, static_cast<uint32_t>(payload.size()));
  StoreLe<uint64_t>(record_header + 4, entry.checksum);
  Emit(ByteView(record_header, sizeof record_header));
  Emit(payload);

  index_.push_back(entry);
  stats_.samples_written += sample_count;
  stats_.chunks_written += 1;
}

DatasetManifest DatasetWriter::Finish() {
  if (finished_) throw Error(ErrorCode::kInvalidArgument, "writer finished");
  FlushPending();

  uint8_t end_marker[kChunkRecordHeaderBytes];
  StoreLe<uint32_t>(end_marker, 0);
  StoreLe<uint64_t>(end_marker + 4, kFnvOffsetBasis);
  Emit(ByteView(end_marker, sizeof end_marker));

  if (schema_.layout == Layout::kIndexable) {
    Bytes footer(index_.size() * kIndexEntryBytes);
    for (size_t k = 0; k < index_.size(); ++k) {
      EncodeIndexEntry(footer.data() + k * kIndexEntryBytes, index_[k]);
    }
    PutLe<uint64_t>(footer, index_.size() * kIndexEntryBytes);
    footer.insert(footer.end(), std::begin(kTrailingMagic),
                  std::end(kTrailingMagic));
    Emit(footer);
  }

  schema_.total_samples = stats_.samples_written;
  schema_.total_chunks = stats_.chunks_written;
  try {
    sink_.WriteAt(0, EncodeHeader(schema_));
    sink_.Close();
  } catch (const std::exception& e) {
    Abort(e);
  }
  finished_ = true;

  DatasetManifest manifest{schema_, std::move(index_)};
  index_.clear();
  manifest.Validate();
  return manifest;
}

WriteStats WriteStreamDataset(std::span<const Bytes> samples, Sink& sink,
                              const ChunkingOptions& chunking) {
  DatasetWriter writer(sink, Layout::kStream, chunking);
  for (const Bytes& s : samples) writer.Append(s);
  writer.Finish();
  return writer.stats();
}

DatasetManifest WriteIndexableDataset(std::span<const Bytes> samples,
                                      Sink& sink,
                                      const ChunkingOptions& chunking) {
  DatasetWriter writer(sink, Layout::kIndexable, chunking);
  for (const Bytes& s : samples) writer.Append(s);
  return writer.Finish();
}

// --- Sequential reader ----------------------------------------------------------------

void BufferMeter::Acquire(uint64_t bytes) {
  current_ += bytes;
  peak_ = std::max(peak_, current_);
}

void BufferMeter::Release(uint64_t bytes) {
  current_ -= std::min(current_, bytes);
}

StreamIterator::StreamIterator(const std::string& path, BufferMeter* meter)
    : path_(path), meter_(meter) {
  fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd_ < 0) {
    throw Error(ErrorCode::kIo, "cannot open " + path + ": " + ErrnoText());
  }
  ::posix_fadvise(fd_, 0, 0, POSIX_FADV_SEQUENTIAL);
  uint8_t header[kHeaderBytes];
  try {
    ReadExact(header, kHeaderBytes, "header");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorrupt) {
      throw Error(ErrorCode::kFormat, path + ": file too short for a header");
    }
    throw;
  }
  schema_ = ParseHeader(header, path);
}

StreamIterator::~StreamIterator() {
  if (fd_ >= 0) ::close(fd_);
  if (meter_ != nullptr) {
    meter_->Release(current_.payload.capacity());
  }
}

void StreamIterator::ReadExact(uint8_t* out, uint64_t n, const char* what) {
  const uint64_t got = PreadFully(fd_, offset_, out, n);
  if (got != n) {
    Error err(ErrorCode::kCorrupt, path_ + ": truncated " + what +
                                       " at byte " + std::to_string(offset_));
    err.WithChunk(next_ordinal_).WithSample(next_global_);
    throw err;
  }
  offset_ += n;
}

void StreamIterator::ResizeBuffer(Bytes& buffer, uint64_t size) {
  if (size > buffer.capacity()) {
    // Free before allocating so the high-water mark is one buffer, not two.
    if (meter_ != nullptr) meter_->Release(buffer.capacity());
    Bytes().swap(buffer);
    buffer.reserve(size);
    if (meter_ != nullptr) meter_->Acquire(buffer.capacity());
  }
  buffer.resize(size);
}

bool StreamIterator::NextChunk(RawChunk& chunk) {
  if (done_) return false;
  const uint64_t record_offset = offset_;
  uint8_t record_header[kChunkRecordHeaderBytes];
  const uint64_t got =
      PreadFully(fd_, offset_, record_header, kChunkRecordHeaderBytes);
  if (got == 0) {
    Error err(ErrorCode::kAbortedFile,
              path_ + ": missing end marker after chunk " +
                  std::to_string(next_ordinal_) + " (incomplete write)");
    err.WithChunk(next_ordinal_).WithSample(next_global_);
    throw err;
  }
  if (got != kChunkRecordHeaderBytes) {
    throw CorruptChunk(next_ordinal_, path_ + ": truncated record header")
        .WithSample(next_global_);
  }
  offset_ += kChunkRecordHeaderBytes;
  const uint32_t length = LoadLe<uint32_t>(record_header);
  const uint64_t checksum = LoadLe<uint64_t>(record_header + 4);

  if (length == 0) {
    if (checksum != kFnvOffsetBasis) {
      throw CorruptChunk(next_ordinal_, path_ + ": damaged end marker");
    }
    done_ = true;
    if (schema_.counts_known() &&
        (schema_.total_chunks != next_ordinal_ ||
         schema_.total_samples != next_global_)) {
      throw Error(ErrorCode::kCorrupt,
                  path_ + ": header counts disagree with chunk records");
    }
    return false;
  }

  ResizeBuffer(chunk.payload, length);
  ReadExact(chunk.payload.data(), length, "chunk payload");
  if (Fnv1a64(chunk.payload) != checksum) {
    throw CorruptChunk(next_ordinal_, "checksum mismatch")
        .WithSample(next_global_);
  }
  uint32_t count;
  try {
    count = CountSamples(schema_, chunk.payload);
  } catch (const Error& e) {
    throw CorruptChunk(next_ordinal_, e.what());
  }
  if (count > schema_.samples_per_chunk) {
    throw CorruptChunk(next_ordinal_, "more samples than samples_per_chunk");
  }
  chunk.ordinal = next_ordinal_;
  chunk.byte_offset = record_offset;
  chunk.first_global_index = next_global_;
  chunk.sample_count = count;
  chunk.checksum = checksum;
  ++next_ordinal_;
  next_global_ += count;
  return true;
}

std::optional<SampleRecord> StreamIterator::Next() {
  while (decoded_pos_ == decoded_.size()) {
    if (!NextChunk(current_)) return std::nullopt;
    decoded_ = DecodeChunk(schema_, current_.payload,
                           current_.first_global_index);
    decoded_pos_ = 0;
  }
  return std::move(decoded_[decoded_pos_++]);
}

std::vector<SampleRecord> ReadAllSamples(const std::string& path) {
  StreamIterator it(path);
  std::vector<SampleRecord> out;
  while (auto s = it.Next()) out.push_back(std::move(*s));
  return out;
}

SchemaDescriptor ReadHeader(const std::string& path) {
  StreamIterator it(path);
  return it.schema();
}

// --- Conversion ---------------------------------------------------------------------

ConversionStats ConvertStreamToIndexable(const std::string& source,
                                         Sink& destination) {
  BufferMeter meter;
  ConversionStats stats;
  {
    StreamIterator it(source, &meter);
    const SchemaDescriptor& schema = it.schema();
    ChunkingOptions chunking{schema.sample_encoding, schema.fixed_sample_bytes,
                             schema.samples_per_chunk};
    DatasetWriter writer(destination, Layout::kIndexable, chunking);
    RawChunk chunk;
    try {
      while (it.NextChunk(chunk)) {
        stats.largest_chunk_bytes =
            std::max<uint64_t>(stats.largest_chunk_bytes, chunk.payload.size());
        writer.AppendEncodedChunk(chunk.payload, chunk.sample_count);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCorrupt &&
          e.code() != ErrorCode::kAbortedFile) {
        throw;
      }
      Error err(e.code(), "conversion failed at source chunk " +
                              std::to_string(e.chunk().value_or(0)) + ": " +
                              e.what());
      if (e.chunk()) err.WithChunk(*e.chunk());
      throw err;
    }
    meter.Release(chunk.payload.capacity());
    Bytes().swap(chunk.payload);
    stats.index_bytes = writer.index_bytes();
    stats.manifest = writer.Finish();
    stats.bytes_written = writer.stats().bytes_written;
  }
  stats.peak_buffer_bytes = meter.peak();
  return stats;
}

ConversionStats ConvertStreamToIndexable(const std::string& source,
                                         const std::string& destination) {
  FileSink sink(destination);
  return ConvertStreamToIndexable(source, sink);
}

// --- Random access ------------------------------------------------------------------

DatasetHandle::DatasetHandle(std::string path, int fd,
                             const OpenOptions& options)
    : path_(std::move(path)), fd_(fd), cache_capacity_(options.cache_chunks) {}

DatasetHandle::~DatasetHandle() {
  if (fd_ >= 0) ::close(fd_);
}

void DatasetHandle::PositionalRead(uint64_t offset, uint8_t* out,
                                   uint64_t n) const {
  if (PreadFully(fd_, offset, out, n) != n) {
    throw Error(ErrorCode::kFormat, path_ + ": truncated file");
  }
  bytes_read_.fetch_add(n, std::memory_order_relaxed);
}

std::shared_ptr<DatasetHandle> DatasetHandle::Open(const std::string& path,
                                                   const OpenOptions& options) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) {
    throw Error(ErrorCode::kIo, "cannot open " + path + ": " + ErrnoText());
  }
  std::shared_ptr<DatasetHandle> handle(new DatasetHandle(path, fd, options));

  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    throw Error(ErrorCode::kIo, "cannot stat " + path + ": " + ErrnoText());
  }
  const uint64_t file_size = static_cast<uint64_t>(st.st_size);
  if (file_size < kHeaderBytes) {
    throw Error(ErrorCode::kFormat, path + ": file too short for a header");
  }
  uint8_t header[kHeaderBytes];
  handle->PositionalRead(0, header, kHeaderBytes);
  SchemaDescriptor schema = ParseHeader(header, path);

  const uint64_t min_size = kHeaderBytes + kChunkRecordHeaderBytes +
                            kTrailerBytes;
  if (file_size < min_size) {
    throw Error(ErrorCode::kFormat, path + ": no footer index");
  }
  uint8_t trailer[kTrailerBytes];
  handle->PositionalRead(file_size - kTrailerBytes, trailer, kTrailerBytes);
  if (std::memcmp(trailer + 8, kTrailingMagic, sizeof kTrailingMagic) != 0) {
    throw Error(ErrorCode::kFormat, path + ": no footer index");
  }
  if (schema.layout != Layout::kIndexable) {
    throw Error(ErrorCode::kFormat,
                path + ": header declares stream layout; no footer index");
  }
  const uint64_t footer_len = LoadLe<uint64_t>(trailer);
  if (footer_len % kIndexEntryBytes != 0 ||
      footer_len > file_size - min_size) {
    throw Error(ErrorCode::kFormat, path + ": truncated footer");
  }
  const uint64_t footer_start = file_size - kTrailerBytes - footer_len;
  Bytes footer(footer_len);
  handle->PositionalRead(footer_start, footer.data(), footer_len);

  DatasetManifest manifest;
  manifest.schema = schema;
  manifest.chunk_index.reserve(footer_len / kIndexEntryBytes);
  for (uint64_t p = 0; p < footer_len; p += kIndexEntryBytes) {
    manifest.chunk_index.push_back(DecodeIndexEntry(footer.data() + p));
  }
  manifest.Validate();
  const uint64_t data_end = footer_start - kChunkRecordHeaderBytes;
  if (!manifest.chunk_index.empty()) {
    const ChunkIndexEntry& last = manifest.chunk_index.back();
    if (last.byte_offset + last.byte_length > data_end) {
      throw Error(ErrorCode::kFormat,
                  path + ": chunk index points past the data region");
    }
  }

  handle->manifest_ = std::move(manifest);
  handle->open_bytes_read_ = handle->bytes_read_.load();
  if (options.drop_os_cache) {
    ::posix_fadvise(fd, 0, 0, POSIX_FADV_DONTNEED);
    ::posix_fadvise(fd, 0, 0, POSIX_FADV_RANDOM);
  }
  return handle;
}

std::shared_ptr<const Bytes> DatasetHandle::LoadPayload(
    uint64_t chunk_ordinal, const ReadOptions& options) const {
  if (cache_capacity_ > 0) {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_map_.find(chunk_ordinal);
    if (it != cache_map_.end()) {
      cache_lru_.splice(cache_lru_.begin(), cache_lru_, it->second);
      cache_hits_.fetch_add(1, std::memory_order_relaxed);
      return it->second->second;
    }
  }

  const ChunkIndexEntry& entry = manifest_.chunk_index[chunk_ordinal];
  auto payload = std::make_shared<Bytes>(entry.payload_length());
  uint8_t record_header[kChunkRecordHeaderBytes];
  iovec iov[2] = {{record_header, sizeof record_header},
                  {payload->data(), payload->size()}};
  if (options.injected_latency.count() > 0) {
    std::this_thread::sleep_for(options.injected_latency);
  }
  uint64_t done = 0;
  const uint64_t total = entry.byte_length;
  while (done < total) {
    // Re-issue from where a short read stopped.
    ssize_t got;
    if (done == 0) {
      got = ::preadv(fd_, iov, 2, static_cast<off_t>(entry.byte_offset));
    } else if (done < kChunkRecordHeaderBytes) {
      iovec rest[2] = {{record_header + done, kChunkRecordHeaderBytes - done},
                       {payload->data(), payload->size()}};
      got = ::preadv(fd_, rest, 2,
                     static_cast<off_t>(entry.byte_offset + done));
    } else {
      const uint64_t p = done - kChunkRecordHeaderBytes;
      got = ::pread(fd_, payload->data() + p, payload->size() - p,
                    static_cast<off_t>(entry.byte_offset + done));
    }
    if (got < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, path_ + ": read failed: " + ErrnoText());
    }
    if (got == 0) {
      throw CorruptChunk(chunk_ordinal, "record truncated");
    }
    done += static_cast<uint64_t>(got);
  }
  bytes_read_.fetch_add(total, std::memory_order_relaxed);
  chunk_reads_.fetch_add(1, std::memory_order_relaxed);

  if (LoadLe<uint32_t>(record_header) != entry.payload_length() ||
      LoadLe<uint64_t>(record_header + 4) != entry.checksum) {
    throw CorruptChunk(chunk_ordinal, "record header disagrees with index");
  }
  if (Fnv1a64(*payload) != entry.checksum) {
    throw CorruptChunk(chunk_ordinal, "checksum mismatch");
  }

  std::shared_ptr<const Bytes> result = std::move(payload);
  if (cache_capacity_ > 0) {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    if (cache_map_.find(chunk_ordinal) == cache_map_.end()) {
      cache_lru_.emplace_front(chunk_ordinal, result);
      cache_map_[chunk_ordinal] = cache_lru_.begin();
      while (cache_lru_.size() > cache_capacity_) {
        cache_map_.erase(cache_lru_.back().first);
        cache_lru_.pop_back();
      }
    }
  }
  return result;
}

Bytes DatasetHandle::ReadChunkPayload(uint64_t chunk_ordinal) const {
  if (chunk_ordinal >= num_chunks()) {
    throw Error(ErrorCode::kIndex, "chunk ordinal " +
                                       std::to_string(chunk_ordinal) +
                                       " out of range");
  }
  const ChunkIndexEntry& entry = manifest_.chunk_index[chunk_ordinal];
  Bytes record(entry.byte_length);
  if (PreadFully(fd_, entry.byte_offset, record.data(), record.size()) !=
      record.size()) {
    throw CorruptChunk(chunk_ordinal, "record truncated");
  }
  bytes_read_.fetch_add(record.size(), std::memory_order_relaxed);
  chunk_reads_.fetch_add(1, std::memory_order_relaxed);
  Bytes payload(record.begin() + kChunkRecordHeaderBytes, record.end());
  if (LoadLe<uint32_t>(record.data()) != payload.size() ||
      LoadLe<uint64_t>(record.data() + 4) != entry.checksum) {
    throw CorruptChunk(chunk_ordinal, "record header disagrees with index");
  }
  if (Fnv1a64(payload) != entry.checksum) {
    throw CorruptChunk(chunk_ordinal, "checksum mismatch");
  }
  return payload;
}

std::vector<SampleRecord> DatasetHandle::GetChunk(
    uint64_t chunk_ordinal, const ReadOptions& options) const {
  if (chunk_ordinal >= num_chunks()) {
    Error err(ErrorCode::kIndex, "chunk ordinal " +
                                     std::to_string(chunk_ordinal) +
                                     " out of range [0, " +
                                     std::to_string(num_chunks()) + ")");
    err.WithChunk(chunk_ordinal);
    throw err;
  }
  const ChunkIndexEntry& entry = manifest_.chunk_index[chunk_ordinal];
  auto payload = LoadPayload(chunk_ordinal, options);
  std::vector<SampleRecord> records;
  try {
    records = DecodeChunk(schema(), *payload, entry.first_global_index);
  } catch (const Error& e) {
    throw CorruptChunk(chunk_ordinal, e.what());
  }
  if (records.size() != entry.sample_count) {
    throw CorruptChunk(chunk_ordinal, "sample count disagrees with index");
  }
  return records;
}

SampleRecord DatasetHandle::GetSample(uint64_t global_index,
                                      const ReadOptions& options,
                                      ReadTimings* timings) const {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const uint64_t ordinal = manifest_.ChunkOf(global_index);
  const ChunkIndexEntry& entry = manifest_.chunk_index[ordinal];
  const auto t1 = Clock::now();
  std::shared_ptr<const Bytes> payload;
  try {
    payload = LoadPayload(ordinal, options);
  } catch (Error& e) {
    e.WithSample(global_index);
    throw;
  }
  const auto t2 = Clock::now();
  SampleRecord record;
  record.global_index = global_index;
  try {
    record.payload = ExtractSample(
        schema(), *payload,
        static_cast<uint32_t>(global_index - entry.first_global_index));
  } catch (const Error& e) {
    throw CorruptChunk(ordinal, e.what()).WithSample(global_index);
  }
  if (timings != nullptr) {
    const auto t3 = Clock::now();
    auto ns = [](auto d) {
      return std::chrono::duration_cast<std::chrono::nanoseconds>(d).count();
    };
    timings->index_lookup_ns += ns(t1 - t0);
    timings->read_ns += ns(t2 - t1);
    timings->decode_ns += ns(t3 - t2);
  }
  return record;
}

IoCounters DatasetHandle::counters() const {
  return {bytes_read_.load(), chunk_reads_.load(), cache_hits_.load()};
}

}  // namespace shufload::format
