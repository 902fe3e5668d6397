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

#include <cmath>
#include <numeric>
#include <vector>

#include "checks.hpp"
#include "doctest.h"
#include "v2f/error.hpp"
#include "v2f/evaluation.hpp"
#include "v2f/toy_data.hpp"

namespace {

using v2f::ErrorKind;

template <typename F>
ErrorKind KindOf(F &&f) {
  try {
    f();
  } catch (const v2f::Error &e) {
    return e.kind();
  }
  FAIL("expected a v2f::Error");
  return ErrorKind::kData;
}

// Long-double two-pass Pearson r.
double PearsonOracle(const std::vector<double> &x, const std::vector<double> &y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// A tiny untrained generation stack over a small toy dataset.
struct TinyEval {
  v2f::Preset preset = v2f::TinyPreset();
  v2f::ToyDataset data;
  v2f::MediaStore store{preset.audio, preset.image};
  v2f::ClipCatalog catalog;
  v2f::MatchingNetworks judge;
  v2f::GenerationModel model;
  std::vector<std::size_t> clips;

  explicit TinyEval(std::uint64_t seed) {
    v2f::ToySpec spec;
    spec.n_identities = 4;
    spec.clips_per_identity = 2;
    spec.frames_per_clip = 3;
    spec.image_size = preset.data.toy_image_size;
    spec.clip_seconds = preset.data.toy_clip_seconds;
    spec.seed = seed;
    data = v2f::SynthesizeToyDataset(spec);
    store = v2f::ToyMediaStore(data, preset.audio, preset.image);
    catalog = v2f::ToyCatalog(data);
    torch::manual_seed(seed);
    judge = v2f::MatchingNetworks::Create(preset.speech, preset.face);
    judge.Train(false);
    model.generator = v2f::Generator(preset.generator);
    model.generator->eval();
    model.condition = v2f::SpeechEncoder(preset.speech);
    model.condition->eval();
    clips.resize(catalog.size());
    std::iota(clips.begin(), clips.end(), 0);
  }
};

}  // namespace

TEST_SUITE("cosine distance") {
  TEST_CASE("reference cases") {
    auto e0 = torch::tensor({1.0, 0.0}), e1 = torch::tensor({0.0, 1.0});
    CHECK(v2f::CosineDistance(e0, e0) == doctest::Approx(0.0));
    CHECK(v2f::CosineDistance(e0, e1) == doctest::Approx(1.0));
    CHECK(v2f::CosineDistance(e0, -e0) == doctest::Approx(2.0));
    CHECK(v2f::CosineDistance(e0, e0 * 7.5) == doctest::Approx(0.0));
    // 1 - cos(45 deg).
    CHECK(v2f::CosineDistance(e0, torch::tensor({1.0, 1.0})) ==
          doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-12));
  }

  TEST_CASE("zero vectors and shape mismatches are rejected") {
    CHECK(KindOf([] { v2f::CosineDistance(torch::zeros({3}), torch::ones({3})); }) ==
          ErrorKind::kInvalidInput);
    CHECK(KindOf([] { v2f::CosineDistance(torch::ones({3}), torch::ones({4})); }) ==
          ErrorKind::kInvalidInput);
  }
}

TEST_SUITE("pearson") {
  TEST_CASE("matches scipy.stats.pearsonr") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const std::vector<double> y{2.1, 5.4, 4.2, 8.3, 13.1, 11.2, 15.8, 13.1, 19.0, 19.9};
    auto r = v2f::Pearson(x, y);
    REQUIRE(r.r.has_value());
    REQUIRE(r.p_value.has_value());
    CHECK(*r.r == doctest::Approx(0.9585598468087408).epsilon(1e-12));
    CHECK(*r.p_value == doctest::Approx(1.2271601249611218e-05).epsilon(1e-8));
    CHECK(r.n == 10);
  }

  TEST_CASE("agrees with a long-double oracle on random data") {
    v2f::Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      const std::size_t n = 3 + rng.Index(200);
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.Normal() * 5.0 + 100.0;
        y[i] = 0.3 * x[i] + rng.Normal();
      }
      auto r = v2f::Pearson(x, y);
      REQUIRE(r.r.has_value());
      CHECK(std::abs(*r.r - PearsonOracle(x, y)) < 1e-10);
      CHECK(*r.p_value >= 0.0);
      CHECK(*r.p_value <= 1.0);
    }
  }

  TEST_CASE("constant input is undefined rather than NaN") {
    const std::vector<double> x{1, 2, 3, 4}, c{0.1, 0.1, 0.1, 0.1};
    auto r = v2f::Pearson(x, c);
    CHECK_FALSE(r.r.has_value());
    CHECK_FALSE(r.p_value.has_value());
    CHECK_FALSE(v2f::Pearson(c, x).r.has_value());
  }

  TEST_CASE("perfect correlation has r = +-1 and p = 0") {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{3, 5, 7, 9, 11}, z{5, 4, 3, 2, 1};
    auto r = v2f::Pearson(x, y);
    CHECK(*r.r == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(*r.p_value == doctest::Approx(0.0));
    CHECK(*v2f::Pearson(x, z).r == doctest::Approx(-1.0).epsilon(1e-14));
  }

  TEST_CASE("fewer than three pairs or unequal lengths are rejected") {
    const std::vector<double> a{1, 2}, b{2, 1}, c{1, 2, 3};
    CHECK(KindOf([&] { v2f::Pearson(a, b); }) == ErrorKind::kInsufficientData);
    CHECK(KindOf([&] { v2f::Pearson(a, c); }) == ErrorKind::kInvalidInput);
  }
}

TEST_SUITE("preference") {
  TEST_CASE("binomial upper tail matches scipy.stats.binom.sf") {
    CHECK(v2f::BinomialUpperTail(60, 100) == doctest::Approx(0.028443966820490392).epsilon(1e-10));
    CHECK(v2f::BinomialUpperTail(50, 100) == doctest::Approx(0.5397946186935895).epsilon(1e-10));
    CHECK(v2f::BinomialUpperTail(0, 100) == doctest::Approx(1.0));
    CHECK(v2f::BinomialUpperTail(10, 10) == doctest::Approx(std::pow(0.5, 10)).epsilon(1e-12));
  }

  TEST_CASE("ties never count as wins") {
    const std::vector<double> a{1, 2, 3, 4}, b{0, 2, 5, 3};
    auto r = v2f::PreferenceFromScores(a, b);
    CHECK(r.n == 4);
    CHECK(r.wins == 2);
    CHECK(r.ties == 1);
    CHECK(r.fraction == doctest::Approx(0.5));
    CHECK(r.tie_rate == doctest::Approx(0.25));
    CHECK(r.binomial_p == doctest::Approx(v2f::BinomialUpperTail(2, 3)));
  }

  TEST_CASE("swapping the two sides exchanges wins and losses") {
    v2f::Rng rng(5);
    std::vector<double> a(200), b(200);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = std::round(rng.Normal() * 3.0);
      b[i] = std::round(rng.Normal() * 3.0);
    }
    auto ab = v2f::PreferenceFromScores(a, b), ba = v2f::PreferenceFromScores(b, a);
    CHECK(ab.ties == ba.ties);
    CHECK(ab.wins + ba.wins + ab.ties == a.size());
  }

  TEST_CASE("empty or mismatched inputs are rejected") {
    const std::vector<double> e, one{1.0}, two{1.0, 2.0};
    CHECK(KindOf([&] { v2f::PreferenceFromScores(e, e); }) == ErrorKind::kInvalidInput);
    CHECK(KindOf([&] { v2f::PreferenceFromScores(one, two); }) == ErrorKind::kInvalidInput);
  }

  TEST_CASE("JSON carries every field") {
    nlohmann::json j = v2f::PreferenceFromScores(std::vector<double>{1, 2, 3},
                                                 std::vector<double>{0, 2, 4});
    for (const char *k : {"n", "wins", "ties", "fraction", "tie_rate", "binomial_p"})
      CHECK(j.contains(k));
  }
}

TEST_SUITE("retrieval") {
  TEST_CASE("rankings and top-k match a brute-force oracle for all metrics") {
    auto r = v2f::testing::CheckRetrievalOracle(11, 10);
    CHECK(r.rankings > 0);
    CHECK(r.rank_mismatches == 0);
    CHECK(r.topk_mismatches == 0);
  }

  TEST_CASE("random embeddings retrieve at chance for every metric") {
    // 100 speakers: chance is 1% at top-1 and 10% at top-10.
    for (auto m : {v2f::DistanceMetric::kL1, v2f::DistanceMetric::kL2,
                   v2f::DistanceMetric::kCosine}) {
      auto r = v2f::testing::RandomRetrieval(2, m);
      CHECK(r.top1 >= 0.5);
      CHECK(r.top1 <= 2.0);
      CHECK(r.top10 >= 7.0);
      CHECK(r.top10 <= 13.0);
    }
  }

  TEST_CASE("top-k accuracy is monotone in k and perfect for identical embeddings") {
    v2f::Rng rng(4);
    auto gallery = rng.NormalTensor({30, 8});
    std::vector<std::string> labels;
    for (int i = 0; i < 30; ++i) labels.push_back("s" + std::to_string(i % 10));
    auto noisy = gallery + rng.NormalTensor({30, 8}) * 2.0;
    auto r = v2f::RetrievalFromEmbeddings(noisy, labels, gallery, labels,
                                          v2f::DistanceMetric::kL2, {1, 2, 5, 10, 30});
    double prev = 0.0;
    for (const auto &[k, acc] : r.top_k_acc) {
      CHECK(acc >= prev);
      prev = acc;
    }
    CHECK(r.top_k_acc.at(30) == doctest::Approx(100.0));
    auto exact = v2f::RetrievalFromEmbeddings(gallery, labels, gallery, labels,
                                              v2f::DistanceMetric::kCosine);
    CHECK(exact.top_k_acc.at(1) == doctest::Approx(100.0));
  }

  TEST_CASE("ties rank the lower gallery index first") {
    const std::vector<double> d{0.5, 0.1, 0.5, 0.1};
    auto order = v2f::RankGallery(d);
    CHECK(order == std::vector<std::size_t>{1, 3, 0, 2});
  }

  TEST_CASE("distance matrices match per-pair formulas") {
    auto q = torch::tensor({{1.0, 2.0}}), g = torch::tensor({{4.0, -2.0}, {1.0, 2.0}});
    auto l1 = v2f::PairwiseDistances(q, g, v2f::DistanceMetric::kL1);
    auto l2 = v2f::PairwiseDistances(q, g, v2f::DistanceMetric::kL2);
    auto cd = v2f::PairwiseDistances(q, g, v2f::DistanceMetric::kCosine);
    CHECK(l1[0][0].item<double>() == doctest::Approx(7.0));
    CHECK(l2[0][0].item<double>() == doctest::Approx(5.0));
    CHECK(cd[0][0].item<double>() == doctest::Approx(1.0 - 0.0));
    CHECK(l1[0][1].item<double>() == doctest::Approx(0.0));
    CHECK(cd[0][1].item<double>() == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("a query speaker missing from the gallery is an invalid query") {
    auto e = torch::eye(3);
    CHECK(KindOf([&] {
            v2f::RetrievalFromEmbeddings(e, {"a", "b", "z"}, e, {"a", "b", "c"},
                                         v2f::DistanceMetric::kL2);
          }) == ErrorKind::kInvalidQuery);
  }

  TEST_CASE("metric names") {
    CHECK(v2f::ParseDistanceMetric("l1") == v2f::DistanceMetric::kL1);
    CHECK(v2f::ParseDistanceMetric("l2") == v2f::DistanceMetric::kL2);
    CHECK(v2f::ParseDistanceMetric("cd") == v2f::DistanceMetric::kCosine);
    CHECK(KindOf([] { v2f::ParseDistanceMetric("hamming"); }) == ErrorKind::kConfig);
    for (auto m : {v2f::DistanceMetric::kL1, v2f::DistanceMetric::kL2,
                   v2f::DistanceMetric::kCosine})
      CHECK(v2f::ParseDistanceMetric(v2f::DistanceMetricName(m)) == m);
  }
}

TEST_SUITE("generation experiments") {
  TEST_CASE("identical conditions make the correlation undefined") {
    TinyEval t(1);
    auto c = torch::ones({5, t.preset.generator.c_dim});
    v2f::Rng rng(1);
    auto r = v2f::Qta1Correlation(t.model.generator, t.judge.face, c, 20, rng);
    CHECK_FALSE(r.pearson.r.has_value());
    nlohmann::json j = r;
    CHECK(j["status"] == "undefined");
    CHECK(j["n"] == 20);
  }

  TEST_CASE("correlation on distinct conditions is finite and reproducible") {
    TinyEval t(2);
    v2f::Rng crng(2);
    auto c = crng.NormalTensor({6, t.preset.generator.c_dim});
    v2f::Rng a(9), b(9);
    auto r1 = v2f::Qta1Correlation(t.model.generator, t.judge.face, c, 30, a);
    auto r2 = v2f::Qta1Correlation(t.model.generator, t.judge.face, c, 30, b);
    REQUIRE(r1.pearson.r.has_value());
    CHECK(std::isfinite(*r1.pearson.r));
    CHECK(*r1.pearson.r == *r2.pearson.r);
    CHECK(r1.cd_face.size() == 30);
    CHECK(KindOf([&] {
            v2f::Qta1Correlation(t.model.generator, t.judge.face, c, 2, a);
          }) == ErrorKind::kInsufficientData);
  }

  TEST_CASE("a generator compared with itself ties on every trial") {
    TinyEval t(3);
    v2f::Rng rng(3);
    auto r = v2f::Qta2VfPreference(t.model, &t.model, t.judge, t.store, t.catalog, t.clips, 2,
                                   rng);
    CHECK(r.n == 2 * t.clips.size());
    CHECK(r.ties == r.n);
    CHECK(r.wins == 0);
    CHECK(r.binomial_p == doctest::Approx(1.0));
  }

  TEST_CASE("voice-to-face against real frames and face-to-voice count every draw") {
    TinyEval t(4);
    v2f::Rng rng(4);
    auto vf = v2f::Qta2VfPreference(t.model, nullptr, t.judge, t.store, t.catalog, t.clips, 3,
                                    rng);
    CHECK(vf.n == 3 * t.clips.size());
    auto fv = v2f::Qta2FvAccuracy(t.model, t.judge, t.store, t.catalog, t.clips, 2, rng);
    CHECK(fv.n == 2 * t.clips.size());
    CHECK(fv.wins + fv.ties <= fv.n);
    const std::vector<std::size_t> one_identity{0, 1};
    CHECK(KindOf([&] {
            v2f::Qta2FvAccuracy(t.model, t.judge, t.store, t.catalog, one_identity, 1, rng);
          }) == ErrorKind::kInsufficientData);
  }

  TEST_CASE("retrieval with generated queries reports every metric") {
    TinyEval t(5);
    // A 4-channel untrained trunk can go fully dead on some images, which
    // yields a zero embedding that cosine distance rightly rejects; a wider
    // trunk keeps this test about the retrieval plumbing.
    auto face_cfg = t.preset.face;
    face_cfg.channels = {16, 16};
    torch::manual_seed(5);
    v2f::FaceEncoder face(face_cfg);
    face->eval();
    v2f::Rng rng(5);
    const std::vector<v2f::DistanceMetric> metrics{
        v2f::DistanceMetric::kL1, v2f::DistanceMetric::kL2, v2f::DistanceMetric::kCosine};
    auto reps = v2f::Qta3Retrieval(t.model, face, t.store, t.catalog, t.clips, t.clips, 2,
                                   1, metrics, 1.0, rng);
    REQUIRE(reps.size() == 3);
    for (const auto &r : reps) {
      CHECK(r.gallery_size == 8);  // 4 speakers x 2 images
      CHECK(r.n_queries == t.clips.size());
      CHECK(r.top_k_acc.at(10) == doctest::Approx(100.0));
    }
    const std::vector<std::size_t> gallery{0, 1};  // a single speaker
    CHECK(KindOf([&] {
            v2f::Qta3Retrieval(t.model, face, t.store, t.catalog, gallery, t.clips, 2, 1,
                               metrics, std::nullopt, rng);
          }) == ErrorKind::kInvalidQuery);
  }

  TEST_CASE("interpolation grids start and end at the endpoint images") {
    TinyEval t(6);
    const auto &g = t.preset.generator;
    v2f::Rng rng(6);
    auto a = rng.NormalTensor({g.c_dim}), b = rng.NormalTensor({g.c_dim});
    auto z = rng.NormalTensor({g.z_dim});
    auto grid = v2f::InterpolateGrid(t.model.generator, a, b, v2f::InterpolationTarget::kCondition,
                                     z, 5);
    CHECK(grid.size(0) == 5);
    auto first = v2f::Generate(t.model.generator, z.unsqueeze(0), a.unsqueeze(0));
    auto last = v2f::Generate(t.model.generator, z.unsqueeze(0), b.unsqueeze(0));
    CHECK((grid[0] - first[0]).abs().max().item<double>() < 1e-5);
    CHECK((grid[4] - last[0]).abs().max().item<double>() < 1e-5);
    auto wrong = torch::zeros({g.c_dim + 1});
    CHECK(KindOf([&] {
            v2f::InterpolateGrid(t.model.generator, wrong, wrong,
                                 v2f::InterpolationTarget::kCondition, z, 5);
          }) == ErrorKind::kInvalidInput);
    CHECK(KindOf([&] {
            v2f::InterpolateGrid(t.model.generator, a, b, v2f::InterpolationTarget::kCondition,
                                 z, 1);
          }) == ErrorKind::kInvalidInput);
  }
}

TEST_SUITE("reference results") {
  TEST_CASE("the bundled table loads and is non-empty") {
    auto j = v2f::LoadReferenceResults();
    CHECK(j.is_object());
    CHECK_FALSE(j.empty());
  }

  TEST_CASE("a missing file is a data error") {
    CHECK(KindOf([] { v2f::LoadReferenceResults("/nonexistent/reference.json"); }) ==
          ErrorKind::kData);
  }
}
