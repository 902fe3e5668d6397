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

#ifndef V2F_CHECKPOINT_HPP_
#define V2F_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include <torch/torch.h>

#include "json.hpp"

namespace v2f {

// Bumped whenever the on-disk layout changes; older files fail to load.
constexpr int64_t kCheckpointFormatVersion = 1;

// Single-file container: format version, a kind tag, a JSON architecture
// descriptor, free-form JSON metadata and every parameter and buffer.
struct CheckpointHeader {
  int64_t format_version = 0;
  std::string kind;
  nlohmann::json architecture;
  nlohmann::json metadata;
};

void SaveCheckpoint(const std::filesystem::path &path, const std::string &kind,
                    const nlohmann::json &architecture, torch::nn::Module &module,
                    const nlohmann::json &metadata = nlohmann::json::object());

CheckpointHeader ReadCheckpointHeader(const std::filesystem::path &path);

// Loads tensors into module. Throws kCheckpointMismatch on a version, kind
// or architecture mismatch, or on missing/mis-shaped tensors.
CheckpointHeader LoadCheckpoint(const std::filesystem::path &path,
                                const std::string &kind,
                                const nlohmann::json &architecture,
                                torch::nn::Module &module);

// Copies parameters and buffers between identically structured modules.
void CopyModuleState(const torch::nn::Module &from, torch::nn::Module &to);

}  // namespace v2f

#endif  // V2F_CHECKPOINT_HPP_
