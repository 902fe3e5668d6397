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

#include "v2f/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "v2f/error.hpp"

namespace v2f {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// R2 low-discrepancy sequence keeps identities of one attribute spread out
// over the (tone, color) square.
constexpr double kR2a = 0.7548776662466927;
constexpr double kR2b = 0.5698402909980532;

double Frac(double x) { return x - std::floor(x); }

std::array<double, 3> HsvToRgb(double h, double s, double v) {
  h = Frac(h) * 6.0;
  const int i = static_cast<int>(h);
  const double f = h - i;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

std::vector<float> SynthesizeAudio(const ToyIdentity &id, const ToySpec &spec,
                                   Rng &rng) {
  const auto n = static_cast<std::size_t>(std::lround(spec.clip_seconds * spec.sample_rate));
  const double jitter = 1.0 + rng.Uniform(-0.015, 0.015);
  const double f0 = (id.attribute == 0 ? 750.0 : 1100.0) * jitter;
  const double f_tone = 1800.0 * std::pow(4000.0 / 1800.0, id.tone) * jitter;
  const double f_color = 4500.0 * std::pow(7000.0 / 4500.0, id.color) * jitter;

  struct Partial {
    double freq, amp, phase;
  };
  std::vector<Partial> partials = {
      {f0, 1.0, 0.0}, {2 * f0, 0.5, 0.0}, {3 * f0, 0.3, 0.0},
      {f_tone, 0.8, 0.0}, {f_color, 0.6, 0.0}};
  for (auto &p : partials) {
    p.amp *= rng.Uniform(0.8, 1.2);
    p.phase = rng.Uniform(0.0, kTwoPi);
  }
  const double env_freq = rng.Uniform(2.0, 5.0);
  const double env_phase = rng.Uniform(0.0, kTwoPi);
  const double noise = rng.Uniform(0.03, 0.08);

  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    double s = 0.0;
    for (const auto &p : partials) s += p.amp * std::sin(kTwoPi * p.freq * t + p.phase);
    s *= 1.0 + 0.3 * std::sin(kTwoPi * env_freq * t + env_phase);
    s += noise * rng.Normal();
    out[i] = static_cast<float>(0.1 * s);
  }
  return out;
}

torch::Tensor RenderFace(const ToyIdentity &id, const ToySpec &spec,
                         double clip_background, Rng &rng) {
  const int size = spec.image_size;
  const auto rgb = HsvToRgb(0.85 * id.tone, 0.55 + 0.45 * id.color, 0.95);
  const double radius = 0.2 + 0.1 * id.color;
  const double aspect = id.attribute == 0 ? 1.0 : 1.45;
  const double rx = radius / std::sqrt(aspect), ry = radius * std::sqrt(aspect);
  const double cx = 0.5 + rng.Uniform(-0.12, 0.12);
  const double cy = 0.5 + rng.Uniform(-0.08, 0.08);
  const double bg = std::clamp(clip_background + rng.Uniform(-0.05, 0.05), 0.05, 0.6);
  std::array<double, 3> tint;
  for (auto &t : tint) t = rng.Uniform(-0.04, 0.04);
  const double edge = 1.0 / size;

  auto img = torch::empty({3, size, size});
  auto acc = img.accessor<float, 3>();
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size, v = (y + 0.5) / size;
      const double r = std::sqrt(std::pow((u - cx) / rx, 2) + std::pow((v - cy) / ry, 2));
      // Soft edge about one pixel wide.
      const double cover = std::clamp((1.0 - r) * radius / edge + 0.5, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double value = cover * rgb[c] + (1.0 - cover) * (bg + tint[c]) +
                             rng.Uniform(-0.02, 0.02);
        acc[c][y][x] = static_cast<float>(std::round(std::clamp(value, 0.0, 1.0) * 255.0));
      }
    }
  }
  return img;
}

}  // namespace

ToyDataset SynthesizeToyDataset(const ToySpec &spec) {
  Require(spec.n_identities >= 2, ErrorKind::kInvalidInput,
          "toy dataset needs at least 2 identities (no negative pool otherwise)");
  Require(spec.clips_per_identity >= 1, ErrorKind::kInvalidInput,
          "clips_per_identity must be positive");
  Require(spec.frames_per_clip >= 2, ErrorKind::kInvalidInput,
          "frames_per_clip must be at least 2");
  Require(spec.image_size >= 4 && spec.clip_seconds > 0 && spec.sample_rate > 0,
          ErrorKind::kInvalidInput, "invalid toy media dimensions");

  Rng rng(spec.seed);
  ToyDataset data;
  data.spec = spec;
  const double shift_tone = rng.Uniform(), shift_color = rng.Uniform();
  for (int i = 0; i < spec.n_identities; ++i) {
    ToyIdentity id;
    id.id = "id" + std::to_string(1000 + i).substr(1);
    id.attribute = i % 2;
    const int k = i / 2;
    id.tone = Frac(shift_tone + 0.5 + k * kR2a + 0.5 * id.attribute);
    id.color = Frac(shift_color + 0.5 + k * kR2b + 0.25 * id.attribute);
    data.identities.push_back(id);
  }

  for (int i = 0; i < spec.n_identities; ++i) {
    const ToyIdentity &id = data.identities[i];
    for (int c = 0; c < spec.clips_per_identity; ++c) {
      ClipRecord rec;
      rec.clip_id = id.id + "_c" + std::to_string(c);
      rec.identity_id = id.id;
      rec.audio_path = "audio/" + rec.clip_id + ".wav";
      data.audio.push_back(SynthesizeAudio(id, spec, rng));
      const double clip_background = rng.Uniform(0.1, 0.5);
      std::vector<torch::Tensor> frames;
      for (int f = 0; f < spec.frames_per_clip; ++f) {
        rec.frame_paths.push_back("frames/" + rec.clip_id + "_f" + std::to_string(f) + ".png");
        frames.push_back(RenderFace(id, spec, clip_background, rng));
      }
      data.frames.push_back(std::move(frames));
      data.clips.push_back(std::move(rec));
      data.clip_identity.push_back(static_cast<std::size_t>(i));
    }
  }
  return data;
}

Manifest WriteToyDataset(const ToyDataset &data, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir / "audio");
  std::filesystem::create_directories(dir / "frames");
  for (std::size_t i = 0; i < data.clips.size(); ++i) {
    WriteWav(dir / data.clips[i].audio_path, AudioWaveform{data.audio[i], data.spec.sample_rate});
    for (std::size_t f = 0; f < data.frames[i].size(); ++f)
      WritePng(dir / data.clips[i].frame_paths[f], data.frames[i][f] / 127.5 - 1.0);
  }
  SaveManifest(dir / "manifest.jsonl", data.clips);
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto &id : data.identities) attrs[id.id] = id.attribute;
  std::ofstream(dir / "attributes.json") << attrs.dump(1) << '\n';
  return Manifest{dir, data.clips};
}

MediaStore ToyMediaStore(const ToyDataset &data, const AudioConfig &audio,
                         const ImageConfig &image) {
  MediaStore store(audio, image);
  for (std::size_t i = 0; i < data.clips.size(); ++i)
    store.AddClip(data.audio[i], data.spec.sample_rate, data.frames[i]);
  return store;
}

ClipCatalog ToyCatalog(const ToyDataset &data) {
  return ClipCatalog::FromManifest(Manifest{{}, data.clips});
}

std::vector<std::pair<std::string, int>> LoadAttributes(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  Require(in.good(), ErrorKind::kData, "cannot open attributes " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kData, path.string() + ": " + e.what());
  }
  std::vector<std::pair<std::string, int>> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace_back(it.key(), it.value().get<int>());
  return out;
}

}  // namespace v2f
