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
// Little-endian field encoding shared by the container code.
#ifndef SHUFLOAD_SRC_BYTE_IO_HPP_
#define SHUFLOAD_SRC_BYTE_IO_HPP_

#include <cstdint>
#include <cstring>
#include <vector>

namespace shufload::internal {

template <typename T>
inline void PutLe(std::vector<uint8_t>& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<uint8_t>(static_cast<uint64_t>(value) >> (8 * i)));
  }
}

template <typename T>
inline void StoreLe(uint8_t* out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<uint8_t>(static_cast<uint64_t>(value) >> (8 * i));
  }
}

template <typename T>
inline T LoadLe(const uint8_t* in) {
  uint64_t value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<uint64_t>(in[i]) << (8 * i);
  }
  return static_cast<T>(value);
}

inline void PutF64(std::vector<uint8_t>& out, double value) {
  uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  PutLe(out, bits);
}

inline double LoadF64(const uint8_t* in) {
  const uint64_t bits = LoadLe<uint64_t>(in);
  double value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

}  // namespace shufload::internal

#endif  // SHUFLOAD_SRC_BYTE_IO_HPP_
