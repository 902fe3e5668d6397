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

#include "v2f/config.hpp"

#include <cmath>

#include "v2f/error.hpp"

namespace v2f {

const char *MatchModeName(MatchMode mode) {
  return mode == MatchMode::kVoiceToFace ? "vf" : "fv";
}

MatchMode ParseMatchMode(const std::string &s) {
  if (s == "vf" || s == "V-F" || s == "v-f") return MatchMode::kVoiceToFace;
  if (s == "fv" || s == "F-V" || s == "f-v") return MatchMode::kFaceToVoice;
  Fail(ErrorKind::kConfig, "unknown matching mode '" + s + "' (expected vf|fv)");
}

int AudioConfig::SegmentLength() const {
  return static_cast<int>(std::lround(sample_rate * duration_s));
}

int GeneratorConfig::ImageSize() const {
  return base_resolution << channels.size();
}

int DefaultInferenceBatch(MatchMode mode) {
  return mode == MatchMode::kVoiceToFace ? 32 : 12;
}

Preset PaperPreset() {
  Preset p;
  p.name = "paper";
  p.audio = {16000, 6.0, 0.01};
  p.image = {128, true};
  p.speech.sinc = {64, 251, 1, 30.0};
  p.speech.channels = {64, 64, 128, 128, 256, 256, 512};
  p.speech.kernels = {20, 11, 11, 11, 11, 11, 11};
  p.speech.strides = {10, 2, 1, 2, 1, 2, 2};
  p.speech.embedding_dim = 128;
  p.face.image_size = 128;
  p.face.channels = {64, 128, 256, 512, 1024, 1024};
  p.face.downsample = {true, true, true, true, true, false};
  p.generator.base_resolution = 4;
  p.generator.base_channels = 1024;
  p.generator.channels = {1024, 512, 256, 128, 64};
  p.inference.batch_size = DefaultInferenceBatch(p.inference.mode);
  return p;
}

Preset ToyPreset() {
  Preset p;
  p.name = "toy";
  p.audio = {16000, 1.0, 0.01};
  p.image = {32, true};
  p.speech.sinc = {16, 101, 1, 30.0};
  p.speech.channels = {16, 32, 32, 64, 64, 64, 64};
  p.speech.kernels = {20, 11, 11, 11, 11, 11, 11};
  p.speech.strides = {10, 2, 1, 2, 1, 2, 2};
  p.face.image_size = 32;
  p.face.channels = {16, 32, 64, 64};
  p.face.downsample = {true, true, true, false};
  p.generator.base_resolution = 4;
  p.generator.base_channels = 64;
  p.generator.channels = {64, 32, 16};
  p.inference.batch_size = 8;
  // Fixed-length epochs so the plateau schedule sees meaningful progress.
  p.inference.max_epochs = 30;
  p.inference.steps_per_epoch = 200;
  p.gan.batch_size = 16;
  p.gan.max_iters = 2000;
  p.gan.log_every = 50;
  p.gan.sample_every = 500;
  p.gan.condition_bank_per_clip = 4;
  p.eval.qta1_pairs = 500;
  p.eval.gallery_images_per_speaker = 4;
  return p;
}

Preset TinyPreset() {
  Preset p;
  p.name = "tiny";
  p.audio = {16000, 0.05, 0.01};
  p.image = {8, false};
  p.speech.sinc = {4, 17, 1, 30.0};
  p.speech.channels = {4, 4};
  p.speech.kernels = {5, 3};
  p.speech.strides = {2, 2};
  p.face.image_size = 8;
  p.face.channels = {4, 4};
  p.face.downsample = {true, false};
  p.generator.base_resolution = 2;
  p.generator.base_channels = 4;
  p.generator.channels = {4, 4};
  p.data.toy_image_size = 8;
  p.data.toy_clip_seconds = 0.1;
  p.inference.batch_size = 4;
  p.inference.k = 3;
  p.gan.batch_size = 4;
  p.gan.max_iters = 4;
  p.gan.log_every = 1;
  p.gan.sample_every = 0;
  p.eval.qta1_pairs = 20;
  return p;
}

Preset PresetByName(const std::string &name) {
  if (name == "paper") return PaperPreset();
  if (name == "toy") return ToyPreset();
  if (name == "tiny") return TinyPreset();
  Fail(ErrorKind::kConfig,
       "unknown preset '" + name + "' (expected paper|toy|tiny)");
}

namespace {

void Check(bool cond, const std::string &what) {
  Require(cond, ErrorKind::kConfig, "invalid config: " + what);
}

}  // namespace

void ValidatePreset(const Preset &p) {
  Check(p.audio.sample_rate > 0, "audio.sample_rate must be positive");
  Check(p.audio.duration_s > 0, "audio.duration_s must be positive");
  Check(p.audio.rms_reference > 0, "audio.rms_reference must be positive");
  Check(p.image.size > 0, "image.size must be positive");
  Check(p.speech.sinc.kernel_size % 2 == 1, "speech.sinc.kernel_size must be odd");
  Check(p.speech.sinc.n_filters > 0 && p.speech.sinc.stride > 0,
        "speech.sinc filters/stride must be positive");
  Check(!p.speech.channels.empty(), "speech.channels must be non-empty");
  Check(p.speech.channels.size() == p.speech.kernels.size() &&
            p.speech.channels.size() == p.speech.strides.size(),
        "speech.channels/kernels/strides must have equal length");
  Check(p.speech.sample_rate == p.audio.sample_rate,
        "speech.sample_rate must equal audio.sample_rate");
  Check(p.face.channels.size() == p.face.downsample.size() &&
            !p.face.channels.empty(),
        "face.channels/downsample must be non-empty and equal length");
  Check(p.face.image_size == p.image.size, "face.image_size must equal image.size");
  Check(p.generator.ImageSize() == p.image.size,
        "generator output resolution must equal image.size");
  Check(p.speech.embedding_dim == p.face.embedding_dim &&
            p.generator.c_dim == p.speech.embedding_dim,
        "embedding dimensions of speech/face encoders and generator condition must agree");
  Check(p.inference.k >= 2, "inference.k must be >= 2");
  Check(p.inference.batch_size > 0, "inference.batch_size must be positive");
  Check(p.inference.lr_init > 0 && p.inference.momentum >= 0 &&
            p.inference.weight_decay >= 0 && p.inference.decay_factor > 1,
        "inference optimiser settings out of range");
  Check(p.inference.patience_epochs >= 1 && p.inference.max_decays >= 1,
        "inference schedule settings must be positive");
  Check(p.gan.lr_g > 0 && p.gan.lr_d > 0, "gan learning rates must be positive");
  Check(p.gan.d_steps_per_g >= 1, "gan.d_steps_per_g must be >= 1");
  Check(p.gan.batch_size >= 2, "gan.batch_size must be >= 2");
  Check(p.gan.r1_gamma >= 0 && p.gan.r1_interval >= 1, "gan R1 settings out of range");
  Check(p.eval.n_repeats >= 1, "eval.n_repeats must be >= 1");
  Check(p.eval.truncation > 0, "eval.truncation must be positive");
}

}  // namespace v2f
