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

#ifndef V2F_TOOLS_RUN_CONFIG_HPP_
#define V2F_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "v2f/config.hpp"

namespace v2f::cli {

// Fully resolved settings of one command invocation.
struct RunConfig {
  std::string preset_name = "paper";
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  Preset preset;

  // Everything except output_dir: feeding this back through --config
  // reproduces the run.
  nlohmann::json ToJson() const;
};

// Layers, lowest precedence first: preset defaults, config file,
// environment (V2F_*), command-line flags. Overrides are dotted key paths
// such as "inference.lr_init"; string values are parsed as JSON when
// possible.
struct ConfigSources {
  std::optional<std::filesystem::path> config_file;
  std::vector<std::pair<std::string, std::string>> env;
  std::vector<std::pair<std::string, nlohmann::json>> flags;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

// V2F_* variables of the process environment. V2F_SEED, V2F_PRESET and
// V2F_OUTPUT_DIR are top-level; V2F_SECTION__KEY maps to section.key.
std::vector<std::pair<std::string, std::string>> EnvironmentOverrides();

// Throws kConfig on unknown keys, type mismatches or invalid values.
RunConfig ResolveConfig(const ConfigSources &sources);

// runs/<YYYYmmdd-HHMMSS> relative to the working directory.
std::filesystem::path DefaultOutputDir();

}  // namespace v2f::cli

#endif  // V2F_TOOLS_RUN_CONFIG_HPP_
