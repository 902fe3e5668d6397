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
#include <fstream>
#include <numbers>
#include <numeric>

#include "checks.hpp"
#include "doctest.h"
#include "test_util.hpp"
#include "v2f/error.hpp"
#include "v2f/gan.hpp"
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

// Closed-form variance of a standard normal truncated to [-a, a].
double TruncatedNormalVariance(double a) {
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(a / std::sqrt(2.0));
  return 1.0 - 2.0 * a * pdf / mass;
}

}  // namespace

TEST_SUITE("adain") {
  TEST_CASE("unit scale and zero bias normalize each channel") {
    v2f::Rng rng(1);
    auto x = rng.NormalTensor({4, 6, 9, 9}) * 3.0 + 2.0;
    auto y = v2f::AdaIN(x, torch::ones({4, 6}), torch::zeros({4, 6}));
    auto mean = y.mean({2, 3});
    auto std = (y - mean.view({4, 6, 1, 1})).pow(2).mean({2, 3}).sqrt();
    CHECK(mean.abs().max().item<double>() < 1e-5);
    CHECK((std - 1.0).abs().max().item<double>() < 1e-3);
  }

  TEST_CASE("scale and bias set the per-channel mean and std") {
    v2f::Rng rng(2);
    auto x = rng.NormalTensor({3, 5, 16, 16}) * rng.Uniform(0.1, 5.0);
    auto scale = rng.NormalTensor({3, 5}) * 2.0;
    auto bias = rng.NormalTensor({3, 5});
    auto y = v2f::AdaIN(x, scale, bias);
    auto mean = y.mean({2, 3});
    auto std = (y - mean.view({3, 5, 1, 1})).pow(2).mean({2, 3}).sqrt();
    CHECK((mean - bias).abs().max().item<double>() < 1e-4);
    CHECK((std - scale.abs()).abs().max().item<double>() < 1e-2);
  }

  TEST_CASE("a constant channel maps to its bias") {
    auto x = torch::full({1, 2, 4, 4}, 3.5);
    auto bias = torch::tensor({{0.25f, -1.0f}});
    auto y = v2f::AdaIN(x, torch::full({1, 2}, 7.0), bias);
    CHECK(torch::equal(y, bias.view({1, 2, 1, 1}).expand({1, 2, 4, 4})));
  }

  TEST_CASE("shape mismatches are invalid input") {
    CHECK(KindOf([] { v2f::AdaIN(torch::zeros({1, 2, 4, 4}), torch::ones({1, 3}), torch::zeros({1, 3})); }) ==
          ErrorKind::kInvalidInput);
    CHECK(KindOf([] { v2f::AdaIN(torch::zeros({2, 4, 4}), torch::ones({1, 2}), torch::zeros({1, 2})); }) ==
          ErrorKind::kInvalidInput);
  }

  TEST_CASE("random maps of widely varying spread hit the target statistics") {
    const auto r = v2f::testing::CheckAdaIN(7, 50);
    CHECK(r.channels > 0);
    CHECK(r.max_mean_error <= 1e-4);
    CHECK(r.max_std_error <= 1e-2);
  }

  TEST_CASE("the conditioned layer responds to the condition only through scale and bias") {
    torch::manual_seed(3);
    v2f::AdaINLayer layer(4, 16, 1e-5);
    auto x = torch::randn({2, 4, 5, 5});
    auto c = torch::randn({2, 16});
    auto y = layer->forward(x, c);
    auto mean = y.mean({2, 3});
    auto y2 = layer->forward(x * 3.0 + 1.0, c);  // affine input changes nothing
    CHECK((y - y2).abs().max().item<double>() < 1e-4);
    CHECK((layer->forward(x, c * 2.0) - y).abs().max().item<double>() > 1e-4);
    CHECK(mean.sizes() == torch::IntArrayRef({2, 4}));
  }
}

TEST_SUITE("generator") {
  TEST_CASE("same latent and condition give identical images") {
    torch::manual_seed(4);
    v2f::Generator g(v2f::ToyPreset().generator);
    auto z = torch::randn({3, 128}), c = torch::randn({3, 128});
    CHECK(torch::equal(v2f::Generate(g, z, c), v2f::Generate(g, z, c)));
  }

  TEST_CASE("outputs stay in [-1, 1] over a thousand random inputs") {
    torch::manual_seed(5);
    v2f::Generator g(v2f::ToyPreset().generator);
    auto img = v2f::Generate(g, torch::randn({1000, 128}) * 3.0, torch::randn({1000, 128}) * 3.0);
    CHECK(img.sizes() == torch::IntArrayRef({1000, 3, 32, 32}));
    CHECK(img.min().item<double>() >= -1.0);
    CHECK(img.max().item<double>() <= 1.0);
  }

  TEST_CASE("paper preset generates 3 x 128 x 128") {
    v2f::Generator g(v2f::PaperPreset().generator);
    CHECK(g->config().ImageSize() == 128);
    CHECK(v2f::Generate(g, torch::randn({1, 128}), torch::randn({1, 128})).sizes() ==
          torch::IntArrayRef({1, 3, 128, 128}));
  }

  TEST_CASE("the condition changes the image") {
    torch::manual_seed(6);
    v2f::Generator g(v2f::TinyPreset().generator);
    auto z = torch::randn({1, 128});
    CHECK(!torch::equal(v2f::Generate(g, z, torch::randn({1, 128})),
                        v2f::Generate(g, z, torch::randn({1, 128}))));
  }

  TEST_CASE("latent or condition dimension mismatch is invalid input") {
    v2f::Generator g(v2f::TinyPreset().generator);
    CHECK(KindOf([&] { g->forward(torch::randn({1, 64}), torch::randn({1, 128})); }) ==
          ErrorKind::kInvalidInput);
    CHECK(KindOf([&] { g->forward(torch::randn({1, 128}), torch::randn({2, 128})); }) ==
          ErrorKind::kInvalidInput);
  }
}

TEST_SUITE("discriminator scores") {
  TEST_CASE("zero condition leaves only the unconditional head") {
    torch::manual_seed(7);
    v2f::Discriminator d(v2f::TinyPreset().face);
    auto f = torch::rand({3, 3, 8, 8}) * 2 - 1;
    auto phi = d->Phi(f);
    auto psi = d->psi(phi).squeeze(1);
    CHECK(torch::equal(d->forward(f, torch::zeros({3, 128})), psi + 0.0));
  }

  TEST_CASE("the projection term is linear in the condition") {
    torch::manual_seed(8);
    v2f::Discriminator d(v2f::TinyPreset().face);
    auto f = torch::rand({3, 3, 8, 8}) * 2 - 1;
    auto c1 = torch::randn({3, 128}), c2 = torch::randn({3, 128});
    auto lhs = d->forward(f, c1 + c2) - d->forward(f, c1) - d->forward(f, c2);
    auto psi = d->psi(d->Phi(f)).squeeze(1);
    CHECK((lhs + psi).abs().max().item<double>() < 1e-5);
  }

  TEST_CASE("hand-built head and features match a hand computation") {
    v2f::Discriminator d(v2f::TinyPreset().face);
    {
      torch::NoGradGuard ng;
      d->psi->weight.zero_();
      d->psi->weight[0][0] = 0.5;
      d->psi->weight[0][1] = -0.25;
      d->psi->bias.fill_(0.1);
    }
    auto phi = torch::zeros({1, 128});
    phi[0][0] = 1.0;
    phi[0][1] = 2.0;
    auto c = torch::zeros({1, 128});
    c[0][0] = 3.0;
    c[0][1] = -1.0;
    // c.phi = 3 - 2 = 1; psi = 0.5 - 0.5 + 0.1 = 0.1.
    CHECK(d->ScoreFromFeatures(phi, c).item<double>() == doctest::Approx(1.1).epsilon(1e-7));
  }

  TEST_CASE("relid scores match a symbolic evaluation on two-dimensional features") {
    auto t = [](std::initializer_list<double> v) {
      return torch::tensor(std::vector<double>(v), torch::kFloat64).view({1, -1});
    };
    auto phi_r = t({1.0, 2.0}), phi_f = t({-1.0, 0.5});
    auto psi_r = torch::tensor({0.3}, torch::kFloat64), psi_f = torch::tensor({-0.2}, torch::kFloat64);
    auto cp = t({0.5, 1.0}), cn = t({2.0, -1.0});
    // g(real) = 0.5 + 2 + 0.3 = 2.8, g(fake) = -0.5 + 0.5 - 0.2 = -0.2.
    // d = (2.8 + 0.2) + (2.5 - 0) = 5.5; g = (-3) + (0 - (-2.5)) = -0.5.
    auto s = v2f::RelidScoresFromFeatures(phi_r, phi_f, psi_r, psi_f, cp, cn, true);
    CHECK(s.d_score.item<double>() == doctest::Approx(5.5).epsilon(1e-12));
    CHECK(s.g_score.item<double>() == doctest::Approx(-0.5).epsilon(1e-12));
    auto plain = v2f::RelidScoresFromFeatures(phi_r, phi_f, psi_r, psi_f, cp, cn, false);
    CHECK(plain.d_score.item<double>() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(plain.g_score.item<double>() == doctest::Approx(-3.0).epsilon(1e-12));
  }

  TEST_CASE("identical real and fake leave only the identity terms") {
    torch::manual_seed(9);
    v2f::Discriminator d(v2f::TinyPreset().face);
    auto f = torch::rand({2, 3, 8, 8}) * 2 - 1;
    auto cp = torch::randn({2, 128}), cn = torch::randn({2, 128});
    auto s = v2f::RelidScores(d, f, f.clone(), cp, cn, true);
    auto phi = d->Phi(f);
    auto expected = (cp * phi).sum(1) - (cn * phi).sum(1);
    CHECK((s.d_score - expected).abs().max().item<double>() < 1e-5);
    CHECK((s.g_score - expected).abs().max().item<double>() < 1e-5);
  }

  TEST_CASE("loss algebra holds exactly on random tiny networks") {
    const auto r = v2f::testing::CheckLossAlgebra(20, 5);
    CHECK(r.antisymmetry == 0.0);
    CHECK(r.reduction == 0.0);
    CHECK(r.decomposition < 1e-5);
    CHECK(r.ln2 < 1e-9);
  }

  TEST_CASE("non-saturating loss has stable asymptotics") {
    auto big = torch::full({4}, 1e4, torch::kFloat64);
    CHECK(v2f::NonSaturatingLoss(big).item<double>() == 0.0);
    CHECK(v2f::NonSaturatingLoss(-big).item<double>() == doctest::Approx(1e4));
    auto mixed = torch::tensor({0.0, 2.0}, torch::kFloat64);
    const double oracle = 0.5 * (std::log(2.0) + std::log1p(std::exp(-2.0)));
    CHECK(v2f::NonSaturatingLoss(mixed).item<double>() == doctest::Approx(oracle).epsilon(1e-12));
  }

  TEST_CASE("batch and condition shape mismatches are invalid input") {
    v2f::Discriminator d(v2f::TinyPreset().face);
    auto f = torch::zeros({2, 3, 8, 8});
    CHECK(KindOf([&] { v2f::RelidScores(d, f, torch::zeros({1, 3, 8, 8}), torch::zeros({2, 128}), torch::zeros({2, 128})); }) ==
          ErrorKind::kInvalidInput);
    CHECK(KindOf([&] { d->forward(f, torch::zeros({2, 64})); }) == ErrorKind::kInvalidInput);
  }
}

TEST_SUITE("gradients") {
  TEST_CASE("discriminator loss gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CHECK(v2f::testing::DiscriminatorLossGradError(seed, true) < 1e-4);
      CHECK(v2f::testing::DiscriminatorLossGradError(seed, false) < 1e-4);
    }
  }

  TEST_CASE("generator loss gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CHECK(v2f::testing::GeneratorLossGradError(seed, true) < 1e-4);
      CHECK(v2f::testing::GeneratorLossGradError(seed, false) < 1e-4);
    }
  }

  TEST_CASE("R1 penalty gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(v2f::testing::R1GradError(seed) < 1e-4);
  }
}

TEST_SUITE("r1") {
  TEST_CASE("a constant scorer has zero penalty") {
    auto real = torch::randn({4, 3, 8, 8});
    auto r1 = v2f::R1Penalty([](const torch::Tensor &x) { return torch::full({x.size(0)}, 2.0); }, real, 10.0);
    CHECK(r1.item<double>() == 0.0);
    auto r1b = v2f::R1Penalty([](const torch::Tensor &x) { return x.sum({1, 2, 3}) * 0.0 + 1.0; }, real, 10.0);
    CHECK(r1b.item<double>() == 0.0);
  }

  TEST_CASE("a linear scorer gives gamma / 2 times the squared weight norm") {
    v2f::Rng rng(10);
    auto w = rng.NormalTensor({3 * 8 * 8}, torch::kFloat64);
    auto real = rng.NormalTensor({5, 3, 8, 8}, torch::kFloat64);
    auto score = [&](const torch::Tensor &x) { return torch::mv(x.flatten(1), w); };
    const double expected = 0.5 * 10.0 * w.pow(2).sum().item<double>();
    CHECK(v2f::R1Penalty(score, real, 10.0).item<double>() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(v2f::R1Penalty(score, real, 20.0).item<double>() == doctest::Approx(2.0 * expected).epsilon(1e-12));
  }

  TEST_CASE("penalty value matches an all-finite-difference input gradient") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) CHECK(v2f::testing::R1ValueError(seed) < 1e-6);
  }

  TEST_CASE("penalty is differentiable into the discriminator") {
    auto t = v2f::testing::MakeTinyGan(11);
    auto r1 = v2f::R1Penalty(t.discriminator, t.real, t.c_pos, 10.0);
    CHECK(r1.requires_grad());
    r1.backward();
    double total = 0.0;
    for (const auto &p : t.discriminator->parameters())
      if (p.grad().defined()) total += p.grad().abs().sum().item<double>();
    CHECK(total > 0.0);
  }
}

TEST_SUITE("truncation") {
  TEST_CASE("a threshold of 8 leaves samples unchanged") {
    v2f::Rng rng(12);
    auto z = rng.NormalTensor({1000, 128}, torch::kFloat64);
    CHECK(torch::equal(v2f::TruncateLatent(z, 8.0, rng), z));
  }

  TEST_CASE("a threshold of 1 bounds components and matches the truncated-normal variance") {
    v2f::Rng rng(13);
    auto z = v2f::SampleLatent(7813, 128, rng, 1.0);  // ~1e6 components
    CHECK(z.abs().max().item<double>() <= 1.0);
    const double var = z.to(torch::kFloat64).var(false).item<double>();
    const double oracle = TruncatedNormalVariance(1.0);
    CHECK(oracle == doctest::Approx(0.291125094772793).epsilon(1e-9));
    CHECK(std::abs(var - oracle) < 0.02 * oracle);
  }

  TEST_CASE("untouched components are kept and only outliers are redrawn") {
    v2f::Rng rng(14);
    auto z = rng.NormalTensor({200, 16}, torch::kFloat64);
    auto t = v2f::TruncateLatent(z, 1.5, rng);
    auto inside = z.abs() <= 1.5;
    CHECK(torch::equal(t.masked_select(inside), z.masked_select(inside)));
    CHECK(t.abs().max().item<double>() <= 1.5);
  }

  TEST_CASE("a non-positive threshold is invalid") {
    v2f::Rng rng(0);
    CHECK(KindOf([&] { v2f::TruncateLatent(torch::zeros({2}), 0.0, rng); }) == ErrorKind::kInvalidInput);
  }

  TEST_CASE("latents are reproducible under a seed") {
    v2f::Rng a(15), b(15);
    CHECK(torch::equal(v2f::SampleLatent(4, 128, a, 0.5), v2f::SampleLatent(4, 128, b, 0.5)));
  }
}

TEST_SUITE("training") {
  struct TinyData {
    v2f::Preset preset = v2f::TinyPreset();
    v2f::ToyDataset data;
    v2f::MediaStore store{preset.audio, preset.image};
    v2f::ClipCatalog catalog;
    std::vector<std::size_t> pool;
    TinyData() {
      v2f::ToySpec spec;
      spec.n_identities = 4;
      spec.clips_per_identity = 2;
      spec.image_size = preset.data.toy_image_size;
      spec.clip_seconds = preset.data.toy_clip_seconds;
      data = v2f::SynthesizeToyDataset(spec);
      store = v2f::ToyMediaStore(data, preset.audio, preset.image);
      catalog = v2f::ToyCatalog(data);
      pool.resize(catalog.size());
      std::iota(pool.begin(), pool.end(), 0);
    }
  };

  TEST_CASE("transfer without pretrained encoders is a configuration error") {
    auto p = v2f::TinyPreset();
    CHECK(KindOf([&] { v2f::MakeGanNetworks(p, nullptr); }) == ErrorKind::kConfig);
    p.gan.skip_transfer = true;
    CHECK_NOTHROW(v2f::MakeGanNetworks(p, nullptr));
  }

  TEST_CASE("transfer copies the pretrained encoders into the condition path and trunk") {
    auto p = v2f::TinyPreset();
    auto pre = v2f::MatchingNetworks::Create(p.speech, p.face);
    auto nets = v2f::MakeGanNetworks(p, &pre);
    auto a = pre.face->named_parameters();
    for (const auto &q : nets.discriminator->phi->named_parameters())
      CHECK(torch::equal(q.value(), a[q.key()]));
    auto s = pre.speech->named_parameters();
    for (const auto &q : nets.speech->named_parameters()) CHECK(torch::equal(q.value(), s[q.key()]));
  }

  TEST_CASE("frozen speech encoder is bitwise unchanged after training steps") {
    TinyData t;
    auto p = t.preset;
    p.gan.skip_transfer = true;
    p.gan.max_iters = 3;
    torch::manual_seed(16);
    auto nets = v2f::MakeGanNetworks(p, nullptr);
    std::vector<torch::Tensor> before;
    for (const auto &x : nets.speech->parameters()) before.push_back(x.clone());
    for (const auto &x : nets.speech->buffers()) before.push_back(x.clone());
    auto g_before = nets.generator->parameters().front().clone();
    v2f::Rng rng(1);
    const auto dir = v2f::testing::TempDir("gan_frozen");
    v2f::GanTrainOptions opts;
    opts.output_dir = dir;
    auto result = v2f::TrainGan(p.gan, nets, t.store, t.catalog, t.pool, rng, opts);
    std::size_t i = 0;
    for (const auto &x : nets.speech->parameters()) CHECK(torch::equal(x, before[i++]));
    for (const auto &x : nets.speech->buffers()) CHECK(torch::equal(x, before[i++]));
    CHECK(!torch::equal(nets.generator->parameters().front(), g_before));
    CHECK(result.iters_run == 3);
    REQUIRE(result.log.size() == 3);
    std::ifstream in(dir / "log.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line);
      for (const char *key : {"iter", "L_D", "L_G", "r1"}) CHECK(j.contains(key));
      CHECK(j["grad_norms"].contains("G"));
      CHECK(j["grad_norms"].contains("D"));
      ++lines;
    }
    CHECK(lines == 3);
  }

  TEST_CASE("training is deterministic under a seed") {
    TinyData t;
    auto p = t.preset;
    p.gan.skip_transfer = true;
    p.gan.max_iters = 2;
    auto run = [&] {
      torch::manual_seed(17);
      auto nets = v2f::MakeGanNetworks(p, nullptr);
      v2f::Rng rng(2);
      auto r = v2f::TrainGan(p.gan, nets, t.store, t.catalog, t.pool, rng);
      return std::make_pair(nlohmann::json(r.log).dump(), nets.generator->parameters().back().clone());
    };
    auto a = run(), b = run();
    CHECK(a.first == b.first);
    CHECK(torch::equal(a.second, b.second));
  }

  TEST_CASE("checkpoint round trip reproduces generated images bitwise") {
    auto p = v2f::TinyPreset();
    p.gan.skip_transfer = true;
    torch::manual_seed(18);
    auto nets = v2f::MakeGanNetworks(p, nullptr);
    const auto dir = v2f::testing::TempDir("gan_ckpt");
    v2f::SaveGanNetworks(dir, p, nets);
    auto loaded = v2f::LoadGanNetworks(dir, p);
    auto z = torch::randn({4, 128}), c = torch::randn({4, 128});
    CHECK(torch::equal(v2f::Generate(nets.generator, z, c), v2f::Generate(loaded.generator, z, c)));
    auto f = torch::rand({2, 3, 8, 8});
    CHECK(torch::equal(nets.discriminator->forward(f, c.slice(0, 0, 2)),
                       loaded.discriminator->forward(f, c.slice(0, 0, 2))));
    auto other = p;
    other.generator.channels = {8, 4};
    CHECK(KindOf([&] { v2f::LoadGanNetworks(dir, other); }) == ErrorKind::kCheckpointMismatch);
  }
}
