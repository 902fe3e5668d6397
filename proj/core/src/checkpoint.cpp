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

#include "v2f/checkpoint.hpp"

#include "v2f/error.hpp"

namespace v2f {

namespace {

std::string ReadString(torch::serialize::InputArchive &archive, const std::string &key,
                       const std::filesystem::path &path) {
  c10::IValue v;
  if (!archive.try_read(key, v) || !v.isString())
    Fail(ErrorKind::kCheckpointMismatch, path.string() + ": missing '" + key + "'");
  return v.toStringRef();
}

CheckpointHeader ReadHeader(torch::serialize::InputArchive &archive,
                            const std::filesystem::path &path) {
  CheckpointHeader h;
  c10::IValue v;
  if (!archive.try_read("format_version", v) || !v.isInt())
    Fail(ErrorKind::kCheckpointMismatch, path.string() + ": not a v2f checkpoint");
  h.format_version = v.toInt();
  if (h.format_version != kCheckpointFormatVersion)
    Fail(ErrorKind::kCheckpointMismatch,
         path.string() + ": checkpoint format version " + std::to_string(h.format_version) +
             " does not match supported version " +
             std::to_string(kCheckpointFormatVersion));
  h.kind = ReadString(archive, "kind", path);
  h.architecture = nlohmann::json::parse(ReadString(archive, "architecture", path));
  h.metadata = nlohmann::json::parse(ReadString(archive, "metadata", path));
  return h;
}

torch::serialize::InputArchive OpenArchive(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    Fail(ErrorKind::kCheckpointMismatch, "checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error &e) {
    Fail(ErrorKind::kCheckpointMismatch, "cannot read checkpoint " + path.string());
  }
  return archive;
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path &path, const std::string &kind,
                    const nlohmann::json &architecture, torch::nn::Module &module,
                    const nlohmann::json &metadata) {
  torch::serialize::OutputArchive archive;
  archive.write("format_version", c10::IValue(kCheckpointFormatVersion));
  archive.write("kind", c10::IValue(kind));
  archive.write("architecture", c10::IValue(architecture.dump()));
  archive.write("metadata", c10::IValue(metadata.dump()));
  for (const auto &p : module.named_parameters())
    archive.write("param/" + p.key(), p.value().detach());
  for (const auto &b : module.named_buffers())
    archive.write("buffer/" + b.key(), b.value().detach(), /*is_buffer=*/true);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  archive.save_to(path.string());
}

CheckpointHeader ReadCheckpointHeader(const std::filesystem::path &path) {
  auto archive = OpenArchive(path);
  return ReadHeader(archive, path);
}

CheckpointHeader LoadCheckpoint(const std::filesystem::path &path, const std::string &kind,
                                const nlohmann::json &architecture,
                                torch::nn::Module &module) {
  auto archive = OpenArchive(path);
  CheckpointHeader h = ReadHeader(archive, path);
  if (h.kind != kind)
    Fail(ErrorKind::kCheckpointMismatch,
         path.string() + ": expected a '" + kind + "' checkpoint, found '" + h.kind + "'");
  if (h.architecture != architecture)
    Fail(ErrorKind::kCheckpointMismatch,
         path.string() + ": architecture descriptor does not match the configured network");

  torch::NoGradGuard no_grad;
  auto load = [&](const std::string &key, torch::Tensor &dst, bool buffer) {
    torch::Tensor t;
    if (!archive.try_read(key, t, buffer))
      Fail(ErrorKind::kCheckpointMismatch, path.string() + ": missing tensor " + key);
    if (t.sizes() != dst.sizes())
      Fail(ErrorKind::kCheckpointMismatch, path.string() + ": shape mismatch for " + key);
    dst.copy_(t);
  };
  for (auto &p : module.named_parameters()) load("param/" + p.key(), p.value(), false);
  for (auto &b : module.named_buffers()) load("buffer/" + b.key(), b.value(), true);
  return h;
}

void CopyModuleState(const torch::nn::Module &from, torch::nn::Module &to) {
  torch::NoGradGuard no_grad;
  auto src_p = from.named_parameters();
  for (auto &p : to.named_parameters()) {
    const auto *s = src_p.find(p.key());
    Require(s != nullptr && s->sizes() == p.value().sizes(), ErrorKind::kCheckpointMismatch,
            "parameter mismatch while copying " + p.key());
    p.value().copy_(*s);
  }
  auto src_b = from.named_buffers();
  for (auto &b : to.named_buffers()) {
    const auto *s = src_b.find(b.key());
    Require(s != nullptr && s->sizes() == b.value().sizes(), ErrorKind::kCheckpointMismatch,
            "buffer mismatch while copying " + b.key());
    b.value().copy_(*s);
  }
}

}  // namespace v2f
