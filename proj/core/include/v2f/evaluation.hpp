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

#ifndef V2F_EVALUATION_HPP_
#define V2F_EVALUATION_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "v2f/dataset.hpp"
#include "v2f/gan.hpp"
#include "v2f/matching.hpp"
#include "v2f/rng.hpp"

namespace v2f {

// 1 - <a, b> / (|a| |b|) in double; zero vectors throw kInvalidInput.
double CosineDistance(const torch::Tensor &a, const torch::Tensor &b);

struct PearsonResult {
  // Empty when either variable has zero variance.
  std::optional<double> r;
  // Two-sided, Student t with n - 2 degrees of freedom.
  std::optional<double> p_value;
  std::size_t n = 0;
};
// Requires n >= 3 (kInsufficientData).
PearsonResult Pearson(std::span<const double> x, std::span<const double> y);

// One-sided P(X >= wins) for X ~ Binomial(n, 0.5).
double BinomialUpperTail(std::size_t wins, std::size_t n);

// A generator together with the speech encoder that produces its condition.
struct GenerationModel {
  Generator generator{nullptr};
  SpeechEncoder condition{nullptr};
};

// One condition per ref, from a single cropped window each; [N, D].
torch::Tensor EncodeConditions(SpeechEncoder &encoder, const MediaStore &store,
                               const std::vector<MediaRef> &refs, Rng &rng);

struct Qta1Result {
  PearsonResult pearson;
  std::vector<double> cd_condition;
  std::vector<double> cd_face;
};
void to_json(nlohmann::json &j, const Qta1Result &r);

// Correlation between CD(c1, c2) and CD(fe1, fe2) over n_pairs random pairs
// of distinct pool entries, each with its own latent. conditions: [P, D].
Qta1Result Qta1Correlation(Generator &generator, FaceEncoder &face_encoder,
                           const torch::Tensor &conditions, std::size_t n_pairs, Rng &rng);

struct RegimeMeans {
  double cd_condition = 0.0;
  double cd_face = 0.0;
  std::size_t n_pairs = 0;
};
struct Qta1ControlResult {
  RegimeMeans same;
  RegimeMeans different;
};
void to_json(nlohmann::json &j, const Qta1ControlResult &r);

// Mean distances over pairs that share the binary attribute and pairs that
// do not.
Qta1ControlResult Qta1AttributeControl(Generator &generator, FaceEncoder &face_encoder,
                                       const torch::Tensor &conditions,
                                       const std::vector<int> &labels, std::size_t n_pairs,
                                       Rng &rng);

struct PreferenceResult {
  std::size_t n = 0;
  std::size_t wins = 0;
  std::size_t ties = 0;
  double fraction = 0.0;  // wins / n; ties never count
  double tie_rate = 0.0;
  double binomial_p = 1.0;  // one-sided over the non-tied trials
};
void to_json(nlohmann::json &j, const PreferenceResult &r);

// Strict a > b comparison of paired scores.
PreferenceResult PreferenceFromScores(std::span<const double> a, std::span<const double> b);

// For every test clip and draw: speech s from one time frame; A is a face
// generated from s; B is either a real frame of the clip (other == nullptr)
// or other's face for the same s and z. A wins when its matching logit with
// the judge's embedding of s is strictly larger.
PreferenceResult Qta2VfPreference(GenerationModel &model, GenerationModel *other,
                                  MatchingNetworks &judge, const MediaStore &store,
                                  const ClipCatalog &catalog,
                                  const std::vector<std::size_t> &test_clips,
                                  int draws_per_clip, Rng &rng);

// Generates f from s1 and counts how often the judge prefers s1 over a
// segment s2 of another identity (strictly).
PreferenceResult Qta2FvAccuracy(GenerationModel &model, MatchingNetworks &judge,
                                const MediaStore &store, const ClipCatalog &catalog,
                                const std::vector<std::size_t> &test_clips, int draws_per_clip,
                                Rng &rng);

enum class DistanceMetric { kL1, kL2, kCosine };
const char *DistanceMetricName(DistanceMetric m);
DistanceMetric ParseDistanceMetric(const std::string &name);

// [Q, G] distances in double.
torch::Tensor PairwiseDistances(const torch::Tensor &queries, const torch::Tensor &gallery,
                                DistanceMetric metric);
// Gallery indices by ascending distance; ties go to the lower index.
std::vector<std::size_t> RankGallery(std::span<const double> distances);

struct RetrievalReport {
  DistanceMetric metric = DistanceMetric::kCosine;
  std::map<int, double> top_k_acc;  // percentages
  std::size_t gallery_size = 0;
  std::size_t n_queries = 0;
};
void to_json(nlohmann::json &j, const RetrievalReport &r);

// A query hits at K when any gallery item with its label is ranked within
// the first K. A query label missing from the gallery throws kInvalidQuery.
RetrievalReport RetrievalFromEmbeddings(const torch::Tensor &queries,
                                        const std::vector<std::string> &query_labels,
                                        const torch::Tensor &gallery,
                                        const std::vector<std::string> &gallery_labels,
                                        DistanceMetric metric,
                                        const std::vector<int> &ks = {1, 2, 5, 10});

// Gallery: up to images_per_speaker real frames per identity of
// gallery_clips. Queries: one speech window per query clip and draw,
// turned into a generated face and embedded by face_encoder.
std::vector<RetrievalReport> Qta3Retrieval(GenerationModel &model, FaceEncoder &face_encoder,
                                           const MediaStore &store, const ClipCatalog &catalog,
                                           const std::vector<std::size_t> &gallery_clips,
                                           const std::vector<std::size_t> &query_clips,
                                           int images_per_speaker, int draws_per_clip,
                                           const std::vector<DistanceMetric> &metrics,
                                           std::optional<double> truncation, Rng &rng);

enum class InterpolationTarget { kCondition, kLatent };

// n_steps images along (1 - t) a + t b, t = i / (n_steps - 1), with the
// other input fixed. a, b, fixed_other: [D].
torch::Tensor InterpolateGrid(Generator &generator, const torch::Tensor &a,
                              const torch::Tensor &b, InterpolationTarget which,
                              const torch::Tensor &fixed_other, int n_steps);

// Published reference numbers shipped with the library (non-binding).
nlohmann::json LoadReferenceResults(const std::filesystem::path &path = {});

}  // namespace v2f

#endif  // V2F_EVALUATION_HPP_
