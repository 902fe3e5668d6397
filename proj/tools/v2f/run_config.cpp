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

#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>

#include "v2f/error.hpp"

extern char **environ;

namespace v2f::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kTopLevel = {"preset", "seed", "output_dir"};

json ParseValue(const std::string &text) {
  try {
    return json::parse(text);
  } catch (const json::exception &) {
    return json(text);
  }
}

bool Compatible(const json &base, const json &value) {
  if (base.is_null()) return true;
  if (base.is_number()) return value.is_number();
  if (base.is_boolean()) return value.is_boolean();
  if (base.is_string()) return value.is_string();
  if (base.is_array()) return value.is_array();
  if (base.is_object()) return value.is_object();
  return false;
}

void Assign(json &tree, const std::vector<std::string> &path, const json &value,
            const std::string &origin) {
  json *node = &tree;
  std::string dotted;
  for (const auto &key : path) {
    dotted += dotted.empty() ? key : "." + key;
    Require(node->is_object() && node->contains(key), ErrorKind::kConfig,
            origin + ": unknown configuration key '" + dotted + "'");
    node = &(*node)[key];
  }
  json v = value;
  if (v.is_string() && !node->is_string()) v = ParseValue(v.get<std::string>());
  Require(Compatible(*node, v), ErrorKind::kConfig,
          origin + ": '" + dotted + "' expects a value like " + node->dump() + ", got " +
              v.dump());
  if (node->is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      auto sub = path;
      sub.push_back(it.key());
      Assign(tree, sub, it.value(), origin);
    }
    return;
  }
  *node = v;
}

std::vector<std::string> SplitPath(const std::string &dotted, char sep = '.') {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : dotted) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

json RunConfig::ToJson() const {
  json j = preset;
  j.erase("name");
  j["preset"] = preset_name;
  j["seed"] = seed;
  return j;
}

std::vector<std::pair<std::string, std::string>> EnvironmentOverrides() {
  std::vector<std::pair<std::string, std::string>> out;
  for (char **e = environ; e && *e; ++e) {
    std::string entry(*e);
    if (entry.rfind("V2F_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(entry.substr(4, eq - 4), entry.substr(eq + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::filesystem::path DefaultOutputDir() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return std::filesystem::path("runs") / buf;
}

RunConfig ResolveConfig(const ConfigSources &sources) {
  json file = json::object();
  if (sources.config_file) {
    std::ifstream in(*sources.config_file);
    Require(static_cast<bool>(in), ErrorKind::kConfig,
            "cannot open config file " + sources.config_file->string());
    try {
      file = json::parse(in);
    } catch (const json::exception &e) {
      Fail(ErrorKind::kConfig, sources.config_file->string() + ": " + e.what());
    }
    Require(file.is_object(), ErrorKind::kConfig, "config file must hold a JSON object");
  }
  std::map<std::string, std::string> top_env;
  std::vector<std::pair<std::string, std::string>> nested_env;
  for (const auto &[k, v] : sources.env) {
    const auto key = Lower(k);
    if (kTopLevel.count(key)) {
      top_env[key] = v;
    } else {
      nested_env.emplace_back(key, v);
    }
  }

  RunConfig rc;
  if (sources.preset) {
    rc.preset_name = *sources.preset;
  } else if (top_env.count("preset")) {
    rc.preset_name = top_env["preset"];
  } else if (file.contains("preset")) {
    rc.preset_name = file["preset"].get<std::string>();
  }
  json tree = PresetByName(rc.preset_name);
  tree.erase("name");

  bool batch_set = false;
  for (auto it = file.begin(); it != file.end(); ++it) {
    if (kTopLevel.count(it.key())) continue;
    Assign(tree, {it.key()}, it.value(), "config file");
  }
  batch_set |= file.contains("inference") && file["inference"].is_object() &&
               file["inference"].contains("batch_size");
  for (const auto &[key, value] : nested_env) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    for (std::size_t sep; (sep = key.find("__", pos)) != std::string::npos; pos = sep + 2)
      parts.push_back(key.substr(pos, sep - pos));
    parts.push_back(key.substr(pos));
    Assign(tree, parts, json(value), "environment V2F_" + key);
    batch_set |= parts.size() == 2 && parts[0] == "inference" && parts[1] == "batch_size";
  }
  for (const auto &[key, value] : sources.flags) {
    Assign(tree, SplitPath(key), value, "flag");
    batch_set |= key == "inference.batch_size";
  }
  if (!batch_set && tree["inference"]["mode"] == "fv")
    tree["inference"]["batch_size"] = DefaultInferenceBatch(MatchMode::kFaceToVoice);

  tree["name"] = rc.preset_name;
  try {
    rc.preset = tree.get<Preset>();
  } catch (const json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("invalid configuration: ") + e.what());
  }
  ValidatePreset(rc.preset);

  auto seed_from = [](const json &v) -> std::uint64_t {
    Require(v.is_number_unsigned() || (v.is_number_integer() && v.get<int64_t>() >= 0),
            ErrorKind::kConfig, "seed must be a non-negative integer");
    return v.get<std::uint64_t>();
  };
  if (sources.seed) {
    rc.seed = *sources.seed;
  } else if (top_env.count("seed")) {
    rc.seed = seed_from(ParseValue(top_env["seed"]));
  } else if (file.contains("seed")) {
    rc.seed = seed_from(file["seed"]);
  }
  if (sources.output_dir) {
    rc.output_dir = *sources.output_dir;
  } else if (top_env.count("output_dir")) {
    rc.output_dir = top_env["output_dir"];
  } else if (file.contains("output_dir")) {
    rc.output_dir = file["output_dir"].get<std::string>();
  } else {
    rc.output_dir = DefaultOutputDir();
  }
  return rc;
}

}  // namespace v2f::cli
