// Copyright 2026 The v2f Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "v2f/error.hpp"

namespace v2f {

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidInput:
      return 2;
    case ErrorKind::kCheckpointMismatch:
      return 4;
    case ErrorKind::kZeroEnergy:
    case ErrorKind::kInsufficientData:
    case ErrorKind::kData:
    case ErrorKind::kInvalidQuery:
      return 3;
  }
  return 1;
}

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kZeroEnergy: return "zero-energy";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kConfig: return "configuration";
    case ErrorKind::kData: return "data";
    case ErrorKind::kCheckpointMismatch: return "checkpoint-mismatch";
    case ErrorKind::kInvalidQuery: return "invalid-query";
  }
  return "unknown";
}

}  // namespace v2f
