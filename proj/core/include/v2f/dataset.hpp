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

#ifndef V2F_DATASET_HPP_
#define V2F_DATASET_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "v2f/audio.hpp"
#include "v2f/config.hpp"
#include "v2f/image.hpp"
#include "v2f/rng.hpp"

namespace v2f {

// One audio-visual clip. Without identity_id every clip is its own identity.
struct ClipRecord {
  std::string clip_id;
  std::string audio_path;
  std::vector<std::string> frame_paths;
  std::optional<std::string> identity_id;

  const std::string &IdentityKey() const {
    return identity_id ? *identity_id : clip_id;
  }
};

void to_json(nlohmann::json &j, const ClipRecord &r);
void from_json(const nlohmann::json &j, ClipRecord &r);

// JSON-lines manifest; media paths are relative to root.
struct Manifest {
  std::filesystem::path root;
  std::vector<ClipRecord> clips;
};

// Reads a manifest. root defaults to the manifest's directory.
Manifest LoadManifest(const std::filesystem::path &path,
                      std::optional<std::filesystem::path> root = std::nullopt);
void SaveManifest(const std::filesystem::path &path,
                  const std::vector<ClipRecord> &clips);
// CSV with header clip_id,audio_path,frame_paths,identity_id; frame paths
// are ';'-separated and an empty identity_id means none.
std::vector<ClipRecord> ImportCsv(const std::filesystem::path &path);

// Index into a clip's time frames: an image frame, or the audio window that
// starts at that frame.
struct MediaRef {
  std::size_t clip = 0;
  std::size_t frame = 0;
  bool operator==(const MediaRef &) const = default;
};

struct MatchingExample {
  MatchMode mode = MatchMode::kVoiceToFace;
  MediaRef anchor;
  std::vector<MediaRef> candidates;
  std::size_t positive_index = 0;
};

void to_json(nlohmann::json &j, const MatchingExample &e);
void from_json(const nlohmann::json &j, MatchingExample &e);

// Identity and frame-count view of a manifest used by the samplers.
struct ClipCatalog {
  std::vector<std::string> clip_ids;
  std::vector<std::string> identities;
  std::vector<std::size_t> n_frames;

  std::size_t size() const { return clip_ids.size(); }
  static ClipCatalog FromManifest(const Manifest &m, int frames_per_clip = 0);
};

// Draws batch_size K-way examples anchored on clips from pool. The positive
// candidate comes from the anchor's clip at a different time frame; the K-1
// negatives are distinct clips of other identities.
std::vector<MatchingExample> SampleKWayBatch(const ClipCatalog &catalog,
                                             const std::vector<std::size_t> &pool,
                                             int k, MatchMode mode,
                                             std::size_t batch_size, Rng &rng);

// Same draw for one given anchor clip.
MatchingExample SampleKWayExample(const ClipCatalog &catalog,
                                  const std::vector<std::size_t> &pool,
                                  std::size_t anchor_clip, int k, MatchMode mode,
                                  Rng &rng);

// Clip-level train/val/test partition plus validation examples whose
// negatives are fixed once at creation.
struct Split {
  std::vector<std::size_t> train, val, test;
  std::vector<MatchingExample> val_examples;
};

Split MakeSplit(const ClipCatalog &catalog, const DataConfig &data,
                const InferenceTrainConfig &train, Rng &rng);
void SaveSplit(const std::filesystem::path &path, const ClipCatalog &catalog,
               const Split &split);
Split LoadSplit(const std::filesystem::path &path, const ClipCatalog &catalog);

// Decoded media for every clip: audio resampled to the model rate (not yet
// cropped or normalised) and frames resized to the model resolution.
class MediaStore {
 public:
  MediaStore(const AudioConfig &audio, const ImageConfig &image)
      : audio_(audio), image_(image) {}

  static MediaStore Load(const Manifest &manifest, const AudioConfig &audio,
                         const ImageConfig &image, int frames_per_clip = 0);

  // Adds a clip from memory. frames are [3, S, S] in [0, 255].
  void AddClip(std::vector<float> audio, int audio_rate,
               const std::vector<torch::Tensor> &frames);

  std::size_t size() const { return audio_samples_.size(); }
  std::size_t NumFrames(std::size_t clip) const { return frames_[clip].size(0); }

  // Preprocessed audio window starting at the given time frame.
  AudioWaveform Window(const MediaRef &ref, Rng &rng) const;
  // [3, S, S] in [-1, 1], optionally horizontally flipped.
  torch::Tensor Frame(const MediaRef &ref, bool flip = false) const;

  // Stacks a batch; flips are drawn from rng when augment is set.
  torch::Tensor Waveforms(const std::vector<MediaRef> &refs, Rng &rng) const;
  torch::Tensor Frames(const std::vector<MediaRef> &refs, Rng &rng,
                       bool augment) const;

  const AudioConfig &audio_config() const { return audio_; }
  const ImageConfig &image_config() const { return image_; }

 private:
  AudioConfig audio_;
  ImageConfig image_;
  std::vector<std::vector<float>> audio_samples_;
  std::vector<torch::Tensor> frames_;  // [n_frames, 3, S, S]
};

}  // namespace v2f

#endif  // V2F_DATASET_HPP_
