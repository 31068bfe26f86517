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
#include "shufload/error.hpp"

namespace shufload {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid argument";
    case ErrorCode::kIo:
      return "i/o error";
    case ErrorCode::kAbortedFile:
      return "aborted file";
    case ErrorCode::kCorrupt:
      return "corrupt data";
    case ErrorCode::kFormat:
      return "format error";
    case ErrorCode::kUnsupportedVersion:
      return "unsupported version";
    case ErrorCode::kIndex:
      return "index out of range";
    case ErrorCode::kNumeric:
      return "numeric error";
    case ErrorCode::kVerification:
      return "verification failure";
    case ErrorCode::kCancelled:
      return "cancelled";
  }
  return "unknown";
}

}  // namespace shufload
