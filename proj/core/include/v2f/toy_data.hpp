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

#ifndef V2F_TOY_DATA_HPP_
#define V2F_TOY_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "v2f/dataset.hpp"

namespace v2f {

struct ToySpec {
  int n_identities = 20;
  int clips_per_identity = 5;
  int frames_per_clip = 4;
  int image_size = 32;
  double clip_seconds = 2.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
};

// Identity factor shared by both modalities. attribute is a binary
// surrogate label; tone and color are continuous in [0, 1).
struct ToyIdentity {
  std::string id;
  int attribute = 0;
  double tone = 0.0;
  double color = 0.0;
};

// Synthetic paired dataset. Identity fixes the audio tone frequencies and
// the shape hue, saturation, size and aspect; phase, envelope, noise,
// shape position and background vary per clip and frame.
struct ToyDataset {
  ToySpec spec;
  std::vector<ToyIdentity> identities;
  std::vector<ClipRecord> clips;
  std::vector<std::size_t> clip_identity;
  std::vector<std::vector<float>> audio;            // per clip
  std::vector<std::vector<torch::Tensor>> frames;   // per clip, [3,S,S] 0..255
};

ToyDataset SynthesizeToyDataset(const ToySpec &spec);

// Writes audio/*.wav, frames/*.png, manifest.jsonl and attributes.json under
// dir and returns the manifest rooted there.
Manifest WriteToyDataset(const ToyDataset &data, const std::filesystem::path &dir);

MediaStore ToyMediaStore(const ToyDataset &data, const AudioConfig &audio,
                         const ImageConfig &image);

ClipCatalog ToyCatalog(const ToyDataset &data);

// identity_id -> binary attribute, as written to attributes.json.
std::vector<std::pair<std::string, int>> LoadAttributes(
    const std::filesystem::path &path);

}  // namespace v2f

#endif  // V2F_TOY_DATA_HPP_
