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

#include "v2f/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "v2f/error.hpp"

namespace v2f {

using nlohmann::json;

double CosineDistance(const torch::Tensor &a, const torch::Tensor &b) {
  Require(a.dim() == 1 && b.dim() == 1 && a.size(0) == b.size(0), ErrorKind::kInvalidInput,
          "cosine distance needs two vectors of equal dimension");
  auto x = a.detach().to(torch::kFloat64);
  auto y = b.detach().to(torch::kFloat64);
  const double nx = x.norm().item<double>(), ny = y.norm().item<double>();
  Require(nx > 0.0 && ny > 0.0, ErrorKind::kInvalidInput,
          "cosine distance is undefined for a zero vector");
  const double cos = std::clamp(torch::dot(x, y).item<double>() / (nx * ny), -1.0, 1.0);
  return 1.0 - cos;
}

PearsonResult Pearson(std::span<const double> x, std::span<const double> y) {
  Require(x.size() == y.size(), ErrorKind::kInvalidInput, "Pearson inputs differ in length");
  Require(x.size() >= 3, ErrorKind::kInsufficientData, "Pearson correlation needs >= 3 pairs");
  const auto n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  PearsonResult res;
  res.n = n;
  // Exact constancy check: the two-pass sums can leave rounding residue for
  // a constant sample.
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y) || !(sxx > 0.0) || !(syy > 0.0)) return res;
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  res.r = r;
  if (std::abs(r) >= 1.0) {
    res.p_value = 0.0;
  } else {
    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    boost::math::students_t dist(df);
    res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return res;
}

double BinomialUpperTail(std::size_t wins, std::size_t n) {
  if (wins == 0) return 1.0;
  if (wins > n) return 0.0;
  boost::math::binomial dist(static_cast<double>(n), 0.5);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(wins - 1)));
}

namespace {

torch::Tensor GenerateBatched(Generator &g, const torch::Tensor &z, const torch::Tensor &c,
                              int64_t chunk = 64) {
  std::vector<torch::Tensor> out;
  for (int64_t i = 0; i < z.size(0); i += chunk) {
    const int64_t len = std::min(chunk, z.size(0) - i);
    out.push_back(Generate(g, z.narrow(0, i, len), c.narrow(0, i, len)));
  }
  return torch::cat(out);
}

std::vector<double> RowDots(const torch::Tensor &a, const torch::Tensor &b) {
  auto d = (a.to(torch::kFloat64) * b.to(torch::kFloat64)).sum(1).contiguous();
  return {d.data_ptr<double>(), d.data_ptr<double>() + d.numel()};
}

std::pair<std::size_t, std::size_t> DistinctPair(std::size_t n, Rng &rng) {
  const std::size_t i = rng.Index(n);
  std::size_t j = rng.Index(n - 1);
  if (j >= i) ++j;
  return {i, j};
}

int64_t ZDim(Generator &g) { return g->config().z_dim; }

json PearsonJson(const PearsonResult &p) {
  json j{{"n", p.n}};
  if (p.r) {
    j["status"] = "defined";
    j["r"] = *p.r;
    j["p_value"] = *p.p_value;
  } else {
    j["status"] = "undefined";
    j["r"] = nullptr;
    j["p_value"] = nullptr;
  }
  return j;
}

// Distances of generated face pairs (i, j) with independent latents.
void PairDistances(Generator &generator, FaceEncoder &face_encoder,
                   const torch::Tensor &conditions,
                   const std::vector<std::pair<std::size_t, std::size_t>> &pairs, Rng &rng,
                   std::vector<double> &cd_c, std::vector<double> &cd_f) {
  const auto n = static_cast<int64_t>(pairs.size());
  std::vector<int64_t> idx_a, idx_b;
  for (const auto &[i, j] : pairs) {
    idx_a.push_back(static_cast<int64_t>(i));
    idx_b.push_back(static_cast<int64_t>(j));
  }
  auto cond = conditions.detach().to(torch::kFloat32);
  auto ca = cond.index_select(0, torch::tensor(idx_a));
  auto cb = cond.index_select(0, torch::tensor(idx_b));
  auto za = SampleLatent(n, ZDim(generator), rng);
  auto zb = SampleLatent(n, ZDim(generator), rng);
  auto fa = EncodeFaceBatch(face_encoder, GenerateBatched(generator, za, ca));
  auto fb = EncodeFaceBatch(face_encoder, GenerateBatched(generator, zb, cb));
  for (int64_t k = 0; k < n; ++k) {
    cd_c.push_back(CosineDistance(ca[k], cb[k]));
    cd_f.push_back(CosineDistance(fa[k], fb[k]));
  }
}

double Mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

torch::Tensor EncodeConditions(SpeechEncoder &encoder, const MediaStore &store,
                               const std::vector<MediaRef> &refs, Rng &rng) {
  Require(!refs.empty(), ErrorKind::kInvalidInput, "no speech segments to encode");
  const auto dtype = encoder->parameters().front().scalar_type();
  return EncodeSpeechBatch(encoder, store.Waveforms(refs, rng).to(dtype));
}

void to_json(json &j, const Qta1Result &r) {
  j = PearsonJson(r.pearson);
  j["mean_cd_condition"] = Mean(r.cd_condition);
  j["mean_cd_face"] = Mean(r.cd_face);
  j["scatter"] = {{"cd_condition", r.cd_condition}, {"cd_face", r.cd_face}};
}

Qta1Result Qta1Correlation(Generator &generator, FaceEncoder &face_encoder,
                           const torch::Tensor &conditions, std::size_t n_pairs, Rng &rng) {
  Require(n_pairs >= 3, ErrorKind::kInsufficientData, "QTA 1 needs at least 3 pairs");
  Require(conditions.dim() == 2 && conditions.size(0) >= 2, ErrorKind::kInsufficientData,
          "QTA 1 needs at least two speech conditions");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < n_pairs; ++k)
    pairs.push_back(DistinctPair(static_cast<std::size_t>(conditions.size(0)), rng));
  Qta1Result r;
  PairDistances(generator, face_encoder, conditions, pairs, rng, r.cd_condition, r.cd_face);
  r.pearson = Pearson(r.cd_condition, r.cd_face);
  return r;
}

void to_json(json &j, const Qta1ControlResult &r) {
  auto regime = [](const RegimeMeans &m) {
    return json{{"mean_cd_condition", m.cd_condition},
                {"mean_cd_face", m.cd_face},
                {"n_pairs", m.n_pairs}};
  };
  j = json{{"same_attribute", regime(r.same)}, {"different_attribute", regime(r.different)}};
}

Qta1ControlResult Qta1AttributeControl(Generator &generator, FaceEncoder &face_encoder,
                                       const torch::Tensor &conditions,
                                       const std::vector<int> &labels, std::size_t n_pairs,
                                       Rng &rng) {
  Require(conditions.dim() == 2 && static_cast<std::size_t>(conditions.size(0)) == labels.size(),
          ErrorKind::kInvalidInput, "one label per condition is required");
  Require(n_pairs >= 1, ErrorKind::kInsufficientData, "n_pairs must be positive");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  std::vector<int> same_labels;
  for (const auto &[label, members] : groups)
    if (members.size() >= 2) same_labels.push_back(label);
  Require(!same_labels.empty(), ErrorKind::kInsufficientData,
          "same-attribute regime has fewer than 2 samples");
  Require(groups.size() >= 2, ErrorKind::kInsufficientData,
          "different-attribute regime has fewer than 2 samples");

  std::vector<std::pair<std::size_t, std::size_t>> same, diff;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const auto &g = groups[same_labels[rng.Index(same_labels.size())]];
    auto [a, b] = DistinctPair(g.size(), rng);
    same.emplace_back(g[a], g[b]);
    for (;;) {
      auto [i, j] = DistinctPair(labels.size(), rng);
      if (labels[i] != labels[j]) {
        diff.emplace_back(i, j);
        break;
      }
    }
  }
  Qta1ControlResult r;
  std::vector<double> cc, cf;
  PairDistances(generator, face_encoder, conditions, same, rng, cc, cf);
  r.same = {Mean(cc), Mean(cf), same.size()};
  cc.clear();
  cf.clear();
  PairDistances(generator, face_encoder, conditions, diff, rng, cc, cf);
  r.different = {Mean(cc), Mean(cf), diff.size()};
  return r;
}

void to_json(json &j, const PreferenceResult &r) {
  j = json{{"n", r.n},
           {"wins", r.wins},
           {"ties", r.ties},
           {"fraction", r.fraction},
           {"tie_rate", r.tie_rate},
           {"binomial_p", r.binomial_p}};
}

PreferenceResult PreferenceFromScores(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorKind::kInvalidInput, "paired scores differ in length");
  Require(!a.empty(), ErrorKind::kInvalidInput, "empty test set");
  PreferenceResult r;
  r.n = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.wins += a[i] > b[i];
    r.ties += a[i] == b[i];
  }
  r.fraction = static_cast<double>(r.wins) / r.n;
  r.tie_rate = static_cast<double>(r.ties) / r.n;
  r.binomial_p = BinomialUpperTail(r.wins, r.n - r.ties);
  return r;
}

PreferenceResult Qta2VfPreference(GenerationModel &model, GenerationModel *other,
                                  MatchingNetworks &judge, const MediaStore &store,
                                  const ClipCatalog &catalog,
                                  const std::vector<std::size_t> &test_clips,
                                  int draws_per_clip, Rng &rng) {
  Require(!test_clips.empty() && draws_per_clip > 0, ErrorKind::kInvalidInput,
          "empty test set");
  std::vector<MediaRef> speech, real;
  for (std::size_t clip : test_clips) {
    const std::size_t nf = catalog.n_frames[clip];
    Require(other != nullptr || nf >= 2, ErrorKind::kInsufficientData,
            "clip " + catalog.clip_ids[clip] + " needs two frames");
    for (int d = 0; d < draws_per_clip; ++d) {
      const std::size_t fs = rng.Index(nf);
      speech.push_back({clip, fs});
      if (!other) real.push_back({clip, (fs + 1 + rng.Index(nf - 1)) % nf});
    }
  }
  auto waves = store.Waveforms(speech, rng);
  auto se = EncodeSpeechBatch(judge.speech, waves);
  auto z = SampleLatent(waves.size(0), ZDim(model.generator), rng);
  auto fe_a = EncodeFaceBatch(
      judge.face, GenerateBatched(model.generator, z, EncodeSpeechBatch(model.condition, waves)));
  torch::Tensor fe_b;
  if (other) {
    fe_b = EncodeFaceBatch(judge.face,
                           GenerateBatched(other->generator, z,
                                           EncodeSpeechBatch(other->condition, waves)));
  } else {
    fe_b = EncodeFaceBatch(judge.face, store.Frames(real, rng, false));
  }
  auto a = RowDots(se, fe_a), b = RowDots(se, fe_b);
  return PreferenceFromScores(a, b);
}

PreferenceResult Qta2FvAccuracy(GenerationModel &model, MatchingNetworks &judge,
                                const MediaStore &store, const ClipCatalog &catalog,
                                const std::vector<std::size_t> &test_clips, int draws_per_clip,
                                Rng &rng) {
  Require(!test_clips.empty() && draws_per_clip > 0, ErrorKind::kInvalidInput,
          "empty test set");
  std::vector<MediaRef> s1, s2;
  for (std::size_t clip : test_clips) {
    std::vector<std::size_t> others;
    for (std::size_t c : test_clips)
      if (catalog.identities[c] != catalog.identities[clip]) others.push_back(c);
    Require(!others.empty(), ErrorKind::kInsufficientData,
            "QTA 2 F-V needs test clips of at least two identities");
    for (int d = 0; d < draws_per_clip; ++d) {
      s1.push_back({clip, rng.Index(catalog.n_frames[clip])});
      const std::size_t o = others[rng.Index(others.size())];
      s2.push_back({o, rng.Index(catalog.n_frames[o])});
    }
  }
  auto w1 = store.Waveforms(s1, rng);
  auto w2 = store.Waveforms(s2, rng);
  auto z = SampleLatent(w1.size(0), ZDim(model.generator), rng);
  auto fe = EncodeFaceBatch(
      judge.face, GenerateBatched(model.generator, z, EncodeSpeechBatch(model.condition, w1)));
  auto a = RowDots(fe, EncodeSpeechBatch(judge.speech, w1));
  auto b = RowDots(fe, EncodeSpeechBatch(judge.speech, w2));
  return PreferenceFromScores(a, b);
}

torch::Tensor InterpolateGrid(Generator &generator, const torch::Tensor &a,
                              const torch::Tensor &b, InterpolationTarget which,
                              const torch::Tensor &fixed_other, int n_steps) {
  Require(n_steps >= 2, ErrorKind::kInvalidInput, "interpolation needs n_steps >= 2");
  const auto &cfg = generator->config();
  const int64_t interp_dim = which == InterpolationTarget::kCondition ? cfg.c_dim : cfg.z_dim;
  const int64_t fixed_dim = which == InterpolationTarget::kCondition ? cfg.z_dim : cfg.c_dim;
  Require(a.dim() == 1 && b.dim() == 1 && a.size(0) == interp_dim && b.size(0) == interp_dim,
          ErrorKind::kInvalidInput, "interpolation endpoints have the wrong dimension");
  Require(fixed_other.dim() == 1 && fixed_other.size(0) == fixed_dim, ErrorKind::kInvalidInput,
          "fixed input has the wrong dimension");
  auto t = torch::linspace(0.0, 1.0, n_steps, torch::kFloat64).unsqueeze(1);
  auto path = ((1.0 - t) * a.to(torch::kFloat64).unsqueeze(0) +
               t * b.to(torch::kFloat64).unsqueeze(0))
                  .to(torch::kFloat32);
  auto fixed = fixed_other.to(torch::kFloat32).unsqueeze(0).expand({n_steps, fixed_dim});
  return which == InterpolationTarget::kCondition ? GenerateBatched(generator, fixed, path)
                                                  : GenerateBatched(generator, path, fixed);
}

json LoadReferenceResults(const std::filesystem::path &path) {
  const auto p = path.empty() ? std::filesystem::path(V2F_DATA_DIR) / "reference_results.json"
                              : path;
  std::ifstream in(p);
  Require(static_cast<bool>(in), ErrorKind::kData, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kData, p.string() + ": " + e.what());
  }
}

}  // namespace v2f
