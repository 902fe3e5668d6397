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

#include <algorithm>
#include <numeric>
#include <set>

#include "v2f/error.hpp"
#include "v2f/evaluation.hpp"

namespace v2f {

using nlohmann::json;

const char *DistanceMetricName(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::kL1:
      return "l1";
    case DistanceMetric::kL2:
      return "l2";
    case DistanceMetric::kCosine:
      return "cd";
  }
  return "?";
}

DistanceMetric ParseDistanceMetric(const std::string &name) {
  if (name == "l1" || name == "L1") return DistanceMetric::kL1;
  if (name == "l2" || name == "L2") return DistanceMetric::kL2;
  if (name == "cd" || name == "CD" || name == "cosine") return DistanceMetric::kCosine;
  Fail(ErrorKind::kConfig, "unknown distance metric '" + name + "' (expected l1, l2 or cd)");
}

torch::Tensor PairwiseDistances(const torch::Tensor &queries, const torch::Tensor &gallery,
                                DistanceMetric metric) {
  Require(queries.dim() == 2 && gallery.dim() == 2 && queries.size(1) == gallery.size(1),
          ErrorKind::kInvalidInput, "distance inputs must be [Q, D] and [G, D]");
  auto q = queries.detach().to(torch::kFloat64);
  auto g = gallery.detach().to(torch::kFloat64);
  if (metric == DistanceMetric::kCosine) {
    auto qn = q.norm(2, 1, true), gn = g.norm(2, 1, true);
    Require((qn > 0).all().item<bool>() && (gn > 0).all().item<bool>(),
            ErrorKind::kInvalidInput, "cosine distance is undefined for a zero vector");
    return 1.0 - torch::mm(q / qn, (g / gn).t());
  }
  std::vector<torch::Tensor> rows;
  constexpr int64_t kChunk = 16;
  for (int64_t i = 0; i < q.size(0); i += kChunk) {
    auto diff = q.narrow(0, i, std::min(kChunk, q.size(0) - i)).unsqueeze(1) - g.unsqueeze(0);
    rows.push_back(metric == DistanceMetric::kL1 ? diff.abs().sum(2)
                                                 : diff.pow(2).sum(2).sqrt());
  }
  return torch::cat(rows);
}

std::vector<std::size_t> RankGallery(std::span<const double> distances) {
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
  return order;
}

void to_json(json &j, const RetrievalReport &r) {
  json acc = json::object();
  for (const auto &[k, v] : r.top_k_acc) acc["top" + std::to_string(k)] = v;
  j = json{{"metric", DistanceMetricName(r.metric)},
           {"top_k_acc", acc},
           {"gallery_size", r.gallery_size},
           {"n_queries", r.n_queries}};
}

RetrievalReport RetrievalFromEmbeddings(const torch::Tensor &queries,
                                        const std::vector<std::string> &query_labels,
                                        const torch::Tensor &gallery,
                                        const std::vector<std::string> &gallery_labels,
                                        DistanceMetric metric, const std::vector<int> &ks) {
  Require(static_cast<std::size_t>(queries.size(0)) == query_labels.size() &&
              static_cast<std::size_t>(gallery.size(0)) == gallery_labels.size(),
          ErrorKind::kInvalidInput, "one label per embedding is required");
  Require(!query_labels.empty() && !gallery_labels.empty(), ErrorKind::kInvalidInput,
          "retrieval needs queries and a gallery");
  const std::set<std::string> known(gallery_labels.begin(), gallery_labels.end());
  for (const auto &l : query_labels)
    Require(known.count(l) > 0, ErrorKind::kInvalidQuery,
            "query speaker '" + l + "' is absent from the gallery");
  auto dist = PairwiseDistances(queries, gallery, metric).contiguous();
  const auto g = static_cast<std::size_t>(gallery.size(0));
  std::vector<std::size_t> hits(ks.size(), 0);
  for (std::size_t qi = 0; qi < query_labels.size(); ++qi) {
    std::span<const double> row(dist.data_ptr<double>() + qi * g, g);
    auto order = RankGallery(row);
    std::size_t first = g;
    for (std::size_t pos = 0; pos < g; ++pos)
      if (gallery_labels[order[pos]] == query_labels[qi]) {
        first = pos;
        break;
      }
    for (std::size_t k = 0; k < ks.size(); ++k) hits[k] += first < static_cast<std::size_t>(ks[k]);
  }
  RetrievalReport r;
  r.metric = metric;
  r.gallery_size = g;
  r.n_queries = query_labels.size();
  for (std::size_t k = 0; k < ks.size(); ++k)
    r.top_k_acc[ks[k]] = 100.0 * static_cast<double>(hits[k]) / r.n_queries;
  return r;
}

std::vector<RetrievalReport> Qta3Retrieval(GenerationModel &model, FaceEncoder &face_encoder,
                                           const MediaStore &store, const ClipCatalog &catalog,
                                           const std::vector<std::size_t> &gallery_clips,
                                           const std::vector<std::size_t> &query_clips,
                                           int images_per_speaker, int draws_per_clip,
                                           const std::vector<DistanceMetric> &metrics,
                                           std::optional<double> truncation, Rng &rng) {
  Require(images_per_speaker >= 1 && draws_per_clip >= 1, ErrorKind::kInvalidInput,
          "images_per_speaker and draws_per_clip must be positive");
  std::map<std::string, int> taken;
  std::vector<MediaRef> gallery_refs;
  std::vector<std::string> gallery_labels;
  for (std::size_t clip : gallery_clips)
    for (std::size_t f = 0; f < catalog.n_frames[clip]; ++f) {
      const auto &id = catalog.identities[clip];
      if (taken[id] >= images_per_speaker) break;
      ++taken[id];
      gallery_refs.push_back({clip, f});
      gallery_labels.push_back(id);
    }
  Require(!gallery_refs.empty(), ErrorKind::kInvalidInput, "empty retrieval gallery");
  std::vector<MediaRef> query_refs;
  std::vector<std::string> query_labels;
  for (std::size_t clip : query_clips) {
    Require(taken.count(catalog.identities[clip]) > 0, ErrorKind::kInvalidQuery,
            "query speaker '" + catalog.identities[clip] + "' is absent from the gallery");
    for (int d = 0; d < draws_per_clip; ++d) {
      query_refs.push_back({clip, rng.Index(catalog.n_frames[clip])});
      query_labels.push_back(catalog.identities[clip]);
    }
  }
  Require(!query_refs.empty(), ErrorKind::kInvalidInput, "no retrieval queries");
  auto gallery = EncodeFaceBatch(face_encoder, store.Frames(gallery_refs, rng, false));
  auto c = EncodeConditions(model.condition, store, query_refs, rng);
  auto z = SampleLatent(c.size(0), model.generator->config().z_dim, rng, truncation);
  std::vector<torch::Tensor> faces;
  for (int64_t i = 0; i < z.size(0); i += 64) {
    const int64_t len = std::min<int64_t>(64, z.size(0) - i);
    faces.push_back(Generate(model.generator, z.narrow(0, i, len), c.narrow(0, i, len)));
  }
  auto queries = EncodeFaceBatch(face_encoder, torch::cat(faces));
  std::vector<RetrievalReport> reports;
  for (auto m : metrics)
    reports.push_back(RetrievalFromEmbeddings(queries, query_labels, gallery, gallery_labels, m));
  return reports;
}

}  // namespace v2f
