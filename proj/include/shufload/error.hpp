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
#ifndef SHUFLOAD_ERROR_HPP_
#define SHUFLOAD_ERROR_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace shufload {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kAbortedFile,
  kCorrupt,
  kFormat,
  kUnsupportedVersion,
  kIndex,
  kNumeric,
  kVerification,
  kCancelled,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported as Error. `chunk()` / `sample()` carry the
// failing location when one is known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  std::optional<uint64_t> chunk() const noexcept { return chunk_; }
  std::optional<uint64_t> sample() const noexcept { return sample_; }

  Error& WithChunk(uint64_t ordinal) {
    chunk_ = ordinal;
    return *this;
  }
  Error& WithSample(uint64_t global_index) {
    sample_ = global_index;
    return *this;
  }

 private:
  ErrorCode code_;
  std::optional<uint64_t> chunk_;
  std::optional<uint64_t> sample_;
};

}  // namespace shufload

#endif  // SHUFLOAD_ERROR_HPP_
