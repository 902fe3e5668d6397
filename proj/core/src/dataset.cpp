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

#include "v2f/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "v2f/error.hpp"

namespace v2f {

using nlohmann::json;

void to_json(json &j, const ClipRecord &r) {
  j = json{{"clip_id", r.clip_id},
           {"audio_path", r.audio_path},
           {"frame_paths", r.frame_paths},
           {"identity_id", r.identity_id ? json(*r.identity_id) : json(nullptr)}};
}

void from_json(const json &j, ClipRecord &r) {
  r.clip_id = j.at("clip_id").get<std::string>();
  r.audio_path = j.at("audio_path").get<std::string>();
  r.frame_paths = j.at("frame_paths").get<std::vector<std::string>>();
  r.identity_id.reset();
  if (j.contains("identity_id") && !j.at("identity_id").is_null())
    r.identity_id = j.at("identity_id").get<std::string>();
}

Manifest LoadManifest(const std::filesystem::path &path,
                      std::optional<std::filesystem::path> root) {
  std::ifstream in(path);
  Require(in.good(), ErrorKind::kData, "cannot open manifest " + path.string());
  Manifest m;
  m.root = root ? *root : path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.clips.push_back(json::parse(line).get<ClipRecord>());
    } catch (const json::exception &e) {
      Fail(ErrorKind::kData, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Require(!m.clips.back().frame_paths.empty(), ErrorKind::kData,
            "clip " + m.clips.back().clip_id + " has no frames");
  }
  Require(!m.clips.empty(), ErrorKind::kData, "manifest " + path.string() + " is empty");
  return m;
}

void SaveManifest(const std::filesystem::path &path,
                  const std::vector<ClipRecord> &clips) {
  std::ofstream out(path);
  Require(out.good(), ErrorKind::kData, "cannot write manifest " + path.string());
  for (const auto &c : clips) out << json(c).dump() << '\n';
}

namespace {

std::vector<std::string> SplitString(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::string Trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  const auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

std::vector<ClipRecord> ImportCsv(const std::filesystem::path &path) {
  std::ifstream in(path);
  Require(in.good(), ErrorKind::kData, "cannot open " + path.string());
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorKind::kData,
          path.string() + " is empty");
  auto header = SplitString(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[Trim(header[i])] = i;
  for (const char *name : {"clip_id", "audio_path", "frame_paths"})
    Require(col.count(name) != 0, ErrorKind::kData,
            path.string() + ": missing column " + name);

  std::vector<ClipRecord> clips;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    auto f = SplitString(line, ',');
    auto get = [&](const std::string &name) -> std::string {
      auto it = col.find(name);
      return it == col.end() || it->second >= f.size() ? "" : Trim(f[it->second]);
    };
    ClipRecord r;
    r.clip_id = get("clip_id");
    r.audio_path = get("audio_path");
    for (auto &p : SplitString(get("frame_paths"), ';'))
      if (!Trim(p).empty()) r.frame_paths.push_back(Trim(p));
    if (auto id = get("identity_id"); !id.empty()) r.identity_id = id;
    Require(!r.clip_id.empty() && !r.audio_path.empty() && !r.frame_paths.empty(),
            ErrorKind::kData, path.string() + ":" + std::to_string(lineno) +
                                  ": clip_id, audio_path and frame_paths are required");
    clips.push_back(std::move(r));
  }
  return clips;
}

void to_json(json &j, const MatchingExample &e) {
  auto ref = [](const MediaRef &r) { return json{{"clip", r.clip}, {"frame", r.frame}}; };
  json cands = json::array();
  for (const auto &c : e.candidates) cands.push_back(ref(c));
  j = json{{"mode", e.mode},
           {"anchor", ref(e.anchor)},
           {"candidates", cands},
           {"positive_index", e.positive_index}};
}

void from_json(const json &j, MatchingExample &e) {
  auto ref = [](const json &r) {
    return MediaRef{r.at("clip").get<std::size_t>(), r.at("frame").get<std::size_t>()};
  };
  e.mode = j.at("mode").get<MatchMode>();
  e.anchor = ref(j.at("anchor"));
  e.candidates.clear();
  for (const auto &c : j.at("candidates")) e.candidates.push_back(ref(c));
  e.positive_index = j.at("positive_index").get<std::size_t>();
}

ClipCatalog ClipCatalog::FromManifest(const Manifest &m, int frames_per_clip) {
  ClipCatalog c;
  for (const auto &clip : m.clips) {
    c.clip_ids.push_back(clip.clip_id);
    c.identities.push_back(clip.IdentityKey());
    std::size_t n = clip.frame_paths.size();
    if (frames_per_clip > 0) n = std::min<std::size_t>(n, frames_per_clip);
    c.n_frames.push_back(n);
  }
  return c;
}

MatchingExample SampleKWayExample(const ClipCatalog &catalog,
                                  const std::vector<std::size_t> &pool,
                                  std::size_t anchor_clip, int k, MatchMode mode,
                                  Rng &rng) {
  Require(k >= 1, ErrorKind::kInvalidInput, "K must be positive");
  const std::size_t frames = catalog.n_frames.at(anchor_clip);
  Require(frames >= 2, ErrorKind::kInsufficientData,
          "clip " + catalog.clip_ids[anchor_clip] +
              " needs at least two time frames for a positive pair");
  std::vector<std::size_t> others;
  for (std::size_t c : pool)
    if (catalog.identities[c] != catalog.identities[anchor_clip]) others.push_back(c);
  Require(others.size() + 1 >= static_cast<std::size_t>(k), ErrorKind::kInsufficientData,
          "K=" + std::to_string(k) + " needs " + std::to_string(k - 1) +
              " negative clips, only " + std::to_string(others.size()) + " available");

  MatchingExample ex;
  ex.mode = mode;
  const std::size_t anchor_frame = rng.Index(frames);
  std::size_t positive_frame = rng.Index(frames - 1);
  if (positive_frame >= anchor_frame) ++positive_frame;
  ex.anchor = {anchor_clip, anchor_frame};

  auto negatives = rng.SampleWithoutReplacement(others, static_cast<std::size_t>(k - 1));
  ex.positive_index = rng.Index(static_cast<std::size_t>(k));
  for (std::size_t j = 0, n = 0; j < static_cast<std::size_t>(k); ++j) {
    if (j == ex.positive_index) {
      ex.candidates.push_back({anchor_clip, positive_frame});
    } else {
      const std::size_t clip = negatives[n++];
      ex.candidates.push_back({clip, rng.Index(catalog.n_frames[clip])});
    }
  }
  return ex;
}

std::vector<MatchingExample> SampleKWayBatch(const ClipCatalog &catalog,
                                             const std::vector<std::size_t> &pool,
                                             int k, MatchMode mode,
                                             std::size_t batch_size, Rng &rng) {
  Require(k >= 2, ErrorKind::kInvalidInput, "K must be at least 2");
  Require(pool.size() >= static_cast<std::size_t>(k), ErrorKind::kInsufficientData,
          "K=" + std::to_string(k) + " needs at least K clips, pool has " +
              std::to_string(pool.size()));
  std::vector<MatchingExample> batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t anchor = pool[rng.Index(pool.size())];
    batch.push_back(SampleKWayExample(catalog, pool, anchor, k, mode, rng));
  }
  return batch;
}

Split MakeSplit(const ClipCatalog &catalog, const DataConfig &data,
                const InferenceTrainConfig &train, Rng &rng) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < catalog.size(); ++i)
    groups[catalog.identities[i]].push_back(i);

  Split split;
  std::vector<std::size_t> loose;  // identities with too few clips to split
  auto count = [](double frac, std::size_t n) {
    return static_cast<std::size_t>(std::max(1.0, std::round(frac * n)));
  };
  for (auto &[id, clips] : groups) {
    if (clips.size() < 3) {
      loose.insert(loose.end(), clips.begin(), clips.end());
      continue;
    }
    rng.Shuffle(clips);
    const std::size_t n_test = data.test_fraction > 0 ? count(data.test_fraction, clips.size()) : 0;
    const std::size_t n_val = data.val_fraction > 0 ? count(data.val_fraction, clips.size()) : 0;
    Require(n_test + n_val < clips.size(), ErrorKind::kConfig,
            "val/test fractions leave no training clips for identity " + id);
    for (std::size_t i = 0; i < clips.size(); ++i) {
      auto &dst = i < n_test ? split.test : i < n_test + n_val ? split.val : split.train;
      dst.push_back(clips[i]);
    }
  }
  if (!loose.empty()) {
    rng.Shuffle(loose);
    const auto n_test = static_cast<std::size_t>(std::round(data.test_fraction * loose.size()));
    const auto n_val = static_cast<std::size_t>(std::round(data.val_fraction * loose.size()));
    for (std::size_t i = 0; i < loose.size(); ++i) {
      auto &dst = i < n_test ? split.test : i < n_test + n_val ? split.val : split.train;
      dst.push_back(loose[i]);
    }
  }
  for (auto *v : {&split.train, &split.val, &split.test}) std::sort(v->begin(), v->end());
  Require(!split.train.empty(), ErrorKind::kConfig, "training split is empty");
  Require(!split.val.empty(), ErrorKind::kConfig, "validation split is empty");

  // Fixed validation negatives; fall back to the whole catalogue when the
  // validation clips alone cannot supply K-1 other identities.
  std::vector<std::size_t> all(catalog.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (std::size_t clip : split.val) {
    std::size_t others = 0;
    for (std::size_t c : split.val) others += catalog.identities[c] != catalog.identities[clip];
    const auto &pool = others + 1 >= static_cast<std::size_t>(train.k) ? split.val : all;
    for (int e = 0; e < train.val_examples_per_clip; ++e)
      split.val_examples.push_back(
          SampleKWayExample(catalog, pool, clip, train.k, train.mode, rng));
  }
  return split;
}

void SaveSplit(const std::filesystem::path &path, const ClipCatalog &catalog,
               const Split &split) {
  auto ids = [&](const std::vector<std::size_t> &v) {
    json a = json::array();
    for (auto i : v) a.push_back(catalog.clip_ids[i]);
    return a;
  };
  auto ref = [&](const MediaRef &r) {
    return json{{"clip_id", catalog.clip_ids[r.clip]}, {"frame", r.frame}};
  };
  json ex = json::array();
  for (const auto &e : split.val_examples) {
    json cands = json::array();
    for (const auto &c : e.candidates) cands.push_back(ref(c));
    ex.push_back({{"mode", e.mode},
                  {"anchor", ref(e.anchor)},
                  {"candidates", cands},
                  {"positive_index", e.positive_index}});
  }
  json j{{"train", ids(split.train)},
         {"val", ids(split.val)},
         {"test", ids(split.test)},
         {"val_examples", ex}};
  std::ofstream out(path);
  Require(out.good(), ErrorKind::kData, "cannot write split " + path.string());
  out << j.dump(1) << '\n';
}

Split LoadSplit(const std::filesystem::path &path, const ClipCatalog &catalog) {
  std::ifstream in(path);
  Require(in.good(), ErrorKind::kData, "cannot open split " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kData, path.string() + ": " + e.what());
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < catalog.size(); ++i) index[catalog.clip_ids[i]] = i;
  auto lookup = [&](const std::string &id) {
    auto it = index.find(id);
    Require(it != index.end(), ErrorKind::kData,
            "split references unknown clip " + id);
    return it->second;
  };
  auto ids = [&](const json &a) {
    std::vector<std::size_t> v;
    for (const auto &id : a) v.push_back(lookup(id.get<std::string>()));
    return v;
  };
  auto ref = [&](const json &r) {
    return MediaRef{lookup(r.at("clip_id").get<std::string>()), r.at("frame").get<std::size_t>()};
  };
  Split s;
  s.train = ids(j.at("train"));
  s.val = ids(j.at("val"));
  s.test = ids(j.at("test"));
  for (const auto &e : j.at("val_examples")) {
    MatchingExample ex;
    ex.mode = e.at("mode").get<MatchMode>();
    ex.anchor = ref(e.at("anchor"));
    for (const auto &c : e.at("candidates")) ex.candidates.push_back(ref(c));
    ex.positive_index = e.at("positive_index").get<std::size_t>();
    s.val_examples.push_back(std::move(ex));
  }
  return s;
}

MediaStore MediaStore::Load(const Manifest &manifest, const AudioConfig &audio,
                            const ImageConfig &image, int frames_per_clip) {
  MediaStore store(audio, image);
  for (const auto &clip : manifest.clips) {
    AudioWaveform wave = ReadWav(manifest.root / clip.audio_path);
    std::size_t n = clip.frame_paths.size();
    std::size_t keep = frames_per_clip > 0 ? std::min<std::size_t>(n, frames_per_clip) : n;
    std::vector<torch::Tensor> frames;
    for (std::size_t i = 0; i < keep; ++i) {
      // Evenly spaced subset when frames_per_clip truncates.
      const std::size_t src = keep == n ? i : i * n / keep;
      frames.push_back(ReadPng(manifest.root / clip.frame_paths[src]));
    }
    store.AddClip(std::move(wave.samples), wave.sample_rate, frames);
  }
  return store;
}

void MediaStore::AddClip(std::vector<float> audio, int audio_rate,
                         const std::vector<torch::Tensor> &frames) {
  Require(!frames.empty(), ErrorKind::kData, "clip has no frames");
  Require(!audio.empty(), ErrorKind::kData, "clip has no audio");
  if (audio_rate != audio_.sample_rate)
    audio = Resample(audio, audio_rate, audio_.sample_rate);
  std::vector<torch::Tensor> processed;
  Rng unused(0);
  for (const auto &f : frames)
    processed.push_back(PreprocessImage(f, image_, unused, /*augment=*/false).pixels);
  audio_samples_.push_back(std::move(audio));
  frames_.push_back(torch::stack(processed));
}

AudioWaveform MediaStore::Window(const MediaRef &ref, Rng &rng) const {
  const auto &samples = audio_samples_.at(ref.clip);
  const std::size_t n_frames = NumFrames(ref.clip);
  const std::size_t start = ref.frame * samples.size() / n_frames;
  const std::size_t len = std::min<std::size_t>(
      samples.size() - start, static_cast<std::size_t>(audio_.SegmentLength()));
  std::span<const float> window(samples.data() + start, len);
  return PreprocessAudio(window, audio_.sample_rate, audio_, rng);
}

torch::Tensor MediaStore::Frame(const MediaRef &ref, bool flip) const {
  auto f = frames_.at(ref.clip)[static_cast<int64_t>(ref.frame)];
  return flip ? HorizontalFlip(f) : f;
}

torch::Tensor MediaStore::Waveforms(const std::vector<MediaRef> &refs, Rng &rng) const {
  const int64_t len = audio_.SegmentLength();
  auto out = torch::empty({static_cast<int64_t>(refs.size()), len});
  for (std::size_t i = 0; i < refs.size(); ++i) {
    AudioWaveform w = Window(refs[i], rng);
    std::copy(w.samples.begin(), w.samples.end(),
              out.data_ptr<float>() + static_cast<int64_t>(i) * len);
  }
  return out;
}

torch::Tensor MediaStore::Frames(const std::vector<MediaRef> &refs, Rng &rng,
                                 bool augment) const {
  std::vector<torch::Tensor> v;
  v.reserve(refs.size());
  for (const auto &r : refs)
    v.push_back(Frame(r, augment && image_.augment_flip && rng.Bernoulli(0.5)));
  return torch::stack(v);
}

}  // namespace v2f
