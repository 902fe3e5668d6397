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

#ifndef V2F_AUDIO_HPP_
#define V2F_AUDIO_HPP_

#include <filesystem>
#include <span>
#include <vector>

#include "v2f/config.hpp"
#include "v2f/rng.hpp"

namespace v2f {

// Mono waveform. After PreprocessAudio the length is exactly
// sample_rate * duration_s and the RMS equals the configured reference.
struct AudioWaveform {
  std::vector<float> samples;
  int sample_rate = 16000;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// 16-bit PCM (and 32-bit float) RIFF/WAVE; multi-channel input is averaged
// down to mono.
AudioWaveform ReadWav(const std::filesystem::path &path);
void WriteWav(const std::filesystem::path &path, const AudioWaveform &wave);

// Band-limited resampling with a Hann-windowed sinc interpolator.
std::vector<float> Resample(std::span<const float> in, int in_rate,
                            int out_rate);

double Rms(std::span<const float> x);

// Resample to config.sample_rate, loop-duplicate short signals, randomly
// crop to exactly the configured duration and scale to the reference RMS.
// Crop offsets come from rng.
AudioWaveform PreprocessAudio(std::span<const float> raw, int raw_rate,
                              const AudioConfig &config, Rng &rng);

}  // namespace v2f

#endif  // V2F_AUDIO_HPP_
