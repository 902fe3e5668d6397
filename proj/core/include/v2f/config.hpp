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

#ifndef V2F_CONFIG_HPP_
#define V2F_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace v2f {

enum class MatchMode { kVoiceToFace, kFaceToVoice };

NLOHMANN_JSON_SERIALIZE_ENUM(MatchMode, {
                                            {MatchMode::kVoiceToFace, "vf"},
                                            {MatchMode::kFaceToVoice, "fv"},
                                        })

const char *MatchModeName(MatchMode mode);
MatchMode ParseMatchMode(const std::string &s);

struct AudioConfig {
  int sample_rate = 16000;
  double duration_s = 6.0;
  double rms_reference = 0.01;
  int SegmentLength() const;
};

struct ImageConfig {
  int size = 128;
  bool augment_flip = true;
};

struct SincConfig {
  int n_filters = 64;
  int kernel_size = 251;
  int stride = 1;
  double init_low_hz = 30.0;
};

// SincNet front-end followed by conv blocks (conv1d, BN, PReLU), temporal
// average pooling and a linear projection to the embedding.
struct SpeechEncoderConfig {
  SincConfig sinc;
  std::vector<int> channels;
  std::vector<int> kernels;
  std::vector<int> strides;
  int embedding_dim = 128;
  int sample_rate = 16000;
};

// Residual 2d-CNN trunk; block i halves the resolution when downsample[i].
// Ends with ReLU, global sum pooling and a linear embedding head.
struct FaceEncoderConfig {
  int image_size = 128;
  std::vector<int> channels;
  std::vector<bool> downsample;
  int embedding_dim = 128;
};

// Residual up-sampling generator with AdaIN conditioning in every block.
struct GeneratorConfig {
  int z_dim = 128;
  int c_dim = 128;
  int base_resolution = 4;
  int base_channels = 1024;
  std::vector<int> channels;  // one up-sampling block per entry
  double adain_eps = 1e-5;
  int ImageSize() const;
};

struct DataConfig {
  // 0 keeps every extracted frame of a clip.
  int frames_per_clip = 0;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  // Toy synthesis parameters.
  int toy_image_size = 32;
  double toy_clip_seconds = 2.0;
  int toy_frames = 4;
};

struct InferenceTrainConfig {
  MatchMode mode = MatchMode::kVoiceToFace;
  int k = 10;
  int batch_size = 32;
  double lr_init = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double decay_factor = 10.0;
  int patience_epochs = 1;
  int max_decays = 3;
  int max_epochs = 100;
  // 0 derives the epoch length from the number of training clips.
  int steps_per_epoch = 0;
  bool freeze_speech_encoder = false;
  // Validation examples generated per validation clip at split creation.
  int val_examples_per_clip = 4;
};

struct GanTrainConfig {
  double lr_g = 1e-4;
  double lr_d = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.9;
  int batch_size = 24;
  int d_steps_per_g = 2;
  double r1_gamma = 10.0;
  // Apply R1 every r1_interval discriminator steps (1 = every step).
  int r1_interval = 1;
  int max_iters = 500000;
  bool use_mismatched_identity_loss = true;
  // Skip the inference-stage transfer: both encoders start from random init.
  bool skip_transfer = false;
  bool freeze_speech_encoder = true;
  bool freeze_face_trunk = false;
  int log_every = 100;
  int sample_every = 5000;
  int checkpoint_every = 0;
  // Pre-encoded speech windows per training clip; 0 encodes every batch.
  // Only honoured while the speech encoder is frozen.
  int condition_bank_per_clip = 0;
};

struct EvalConfig {
  int n_repeats = 5;
  int qta1_pairs = 1000;
  int qta2_draws_per_clip = 1;
  int gallery_images_per_speaker = 50;
  double truncation = 1.0;
};

// Architecture and training defaults for one scale of the system.
struct Preset {
  std::string name;
  AudioConfig audio;
  ImageConfig image;
  SpeechEncoderConfig speech;
  FaceEncoderConfig face;
  GeneratorConfig generator;
  DataConfig data;
  InferenceTrainConfig inference;
  GanTrainConfig gan;
  EvalConfig eval;
};

// Full-scale networks and optimiser settings.
Preset PaperPreset();
// Desk-scale networks (32x32 faces, 1 s audio) for CPU runs.
Preset ToyPreset();
// Minimal networks used by gradient checks and fast unit tests.
Preset TinyPreset();
Preset PresetByName(const std::string &name);

// Inference batch size default for a mode: 32 for V-F, 12 for F-V.
int DefaultInferenceBatch(MatchMode mode);

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AudioConfig, sample_rate,
                                                duration_s, rms_reference)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ImageConfig, size, augment_flip)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SincConfig, n_filters,
                                                kernel_size, stride, init_low_hz)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SpeechEncoderConfig, sinc,
                                                channels, kernels, strides,
                                                embedding_dim, sample_rate)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FaceEncoderConfig, image_size,
                                                channels, downsample,
                                                embedding_dim)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GeneratorConfig, z_dim, c_dim,
                                                base_resolution, base_channels,
                                                channels, adain_eps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DataConfig, frames_per_clip,
                                                val_fraction, test_fraction,
                                                toy_image_size,
                                                toy_clip_seconds, toy_frames)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    InferenceTrainConfig, mode, k, batch_size, lr_init, momentum, weight_decay,
    decay_factor, patience_epochs, max_decays, max_epochs, steps_per_epoch,
    freeze_speech_encoder, val_examples_per_clip)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    GanTrainConfig, lr_g, lr_d, adam_beta1, adam_beta2, batch_size,
    d_steps_per_g, r1_gamma, r1_interval, max_iters,
    use_mismatched_identity_loss, skip_transfer, freeze_speech_encoder,
    freeze_face_trunk, log_every, sample_every, checkpoint_every,
    condition_bank_per_clip)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, n_repeats,
                                                qta1_pairs, qta2_draws_per_clip,
                                                gallery_images_per_speaker,
                                                truncation)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Preset, name, audio, image,
                                                speech, face, generator, data,
                                                inference, gan, eval)

// Validates value ranges and cross-field consistency; throws kConfig.
void ValidatePreset(const Preset &p);

}  // namespace v2f

#endif  // V2F_CONFIG_HPP_
