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

#include "v2f/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "v2f/error.hpp"

namespace v2f {

namespace {

std::uint32_t ReadU32(const char *p) {
  return static_cast<std::uint8_t>(p[0]) |
         (static_cast<std::uint8_t>(p[1]) << 8) |
         (static_cast<std::uint8_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[3])) << 24);
}

std::uint16_t ReadU16(const char *p) {
  return static_cast<std::uint16_t>(static_cast<std::uint8_t>(p[0]) |
                                    (static_cast<std::uint8_t>(p[1]) << 8));
}

void PutU32(std::string &s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string &s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioWaveform ReadWav(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorKind::kData, "cannot open audio file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  Require(bytes.size() >= 12 && bytes.compare(0, 4, "RIFF") == 0 &&
              bytes.compare(8, 4, "WAVE") == 0,
          ErrorKind::kData, path.string() + " is not a RIFF/WAVE file");

  int format = 0, channels = 0, rate = 0, bits = 0;
  const char *data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char *chunk = bytes.data() + pos;
    std::uint32_t len = ReadU32(chunk + 4);
    std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0 && body + 16 <= bytes.size()) {
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = static_cast<int>(ReadU32(bytes.data() + body + 4));
      bits = ReadU16(bytes.data() + body + 14);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = std::min<std::size_t>(len, bytes.size() - body);
    }
    pos = body + len + (len & 1);
  }
  Require(data != nullptr && channels > 0 && rate > 0, ErrorKind::kData,
          path.string() + ": missing fmt or data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  Require(pcm16 || f32, ErrorKind::kData,
          path.string() + ": only 16-bit PCM or 32-bit float WAV is supported");

  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * bits / 8;
  const std::size_t frames = data_len / frame_bytes;
  AudioWaveform wave;
  wave.sample_rate = rate;
  wave.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
      const char *p = data + i * frame_bytes + ch * (bits / 8);
      if (pcm16) {
        acc += static_cast<std::int16_t>(ReadU16(p)) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        acc += f;
      }
    }
    wave.samples[i] = static_cast<float>(acc / channels);
  }
  return wave;
}

void WriteWav(const std::filesystem::path &path, const AudioWaveform &wave) {
  const std::uint32_t data_len = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  PutU32(out, 36 + data_len);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, 1);  // mono
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate * 2));
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, data_len);
  for (float s : wave.samples) {
    double v = std::clamp(static_cast<double>(s), -1.0, 1.0) * 32767.0;
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v))));
  }
  std::ofstream f(path, std::ios::binary);
  Require(f.good(), ErrorKind::kData, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<float> Resample(std::span<const float> in, int in_rate,
                            int out_rate) {
  Require(in_rate > 0 && out_rate > 0, ErrorKind::kInvalidInput,
          "sample rates must be positive");
  if (in_rate == out_rate) return {in.begin(), in.end()};
  const std::size_t out_len = static_cast<std::size_t>(
      static_cast<double>(in.size()) * out_rate / in_rate);
  Require(out_len >= 1, ErrorKind::kInvalidInput,
          "input shorter than one sample after resampling");

  // Cutoff relative to the input Nyquist; below 1 when decimating.
  const double cutoff = std::min(1.0, static_cast<double>(out_rate) / in_rate);
  const int half_width = static_cast<int>(std::ceil(16.0 / cutoff));
  const double step = static_cast<double>(in_rate) / out_rate;
  const auto n_in = static_cast<std::int64_t>(in.size());

  std::vector<float> out(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double x = n * step;
    const auto center = static_cast<std::int64_t>(std::floor(x));
    double acc = 0.0;
    for (std::int64_t k = center - half_width + 1; k <= center + half_width; ++k) {
      if (k < 0 || k >= n_in) continue;
      const double d = x - static_cast<double>(k);
      const double arg = std::numbers::pi * cutoff * d;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * d / half_width));
      acc += in[static_cast<std::size_t>(k)] * cutoff * sinc * w;
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

double Rms(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

AudioWaveform PreprocessAudio(std::span<const float> raw, int raw_rate,
                              const AudioConfig &config, Rng &rng) {
  Require(!raw.empty(), ErrorKind::kInvalidInput, "empty waveform");
  Require(raw_rate > 0, ErrorKind::kInvalidInput, "sample rate must be positive");
  std::vector<float> x = Resample(raw, raw_rate, config.sample_rate);
  Require(!x.empty(), ErrorKind::kInvalidInput,
          "input shorter than one sample after resampling");

  const std::size_t target = static_cast<std::size_t>(config.SegmentLength());
  if (x.size() < target) {
    const std::size_t base = x.size();
    const std::size_t copies = (target + base - 1) / base;
    x.reserve(copies * base);
    for (std::size_t c = 1; c < copies; ++c)
      x.insert(x.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(base));
  }
  std::size_t offset = 0;
  if (x.size() > target) offset = rng.Index(x.size() - target + 1);

  AudioWaveform w;
  w.sample_rate = config.sample_rate;
  w.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(offset),
                   x.begin() + static_cast<std::ptrdiff_t>(offset + target));

  const double rms = Rms(w.samples);
  Require(rms > 0.0 && std::isfinite(rms), ErrorKind::kZeroEnergy,
          "zero-energy waveform: RMS normalisation undefined");
  const double gain = config.rms_reference / rms;
  for (float &v : w.samples) v = static_cast<float>(v * gain);
  return w;
}

}  // namespace v2f
