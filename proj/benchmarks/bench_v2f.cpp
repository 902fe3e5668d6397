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

// Throughput of the hot paths at toy scale: sinc filtering, both encoders,
// generation, the K-way matching loss and gallery ranking.

#include <benchmark/benchmark.h>

#include <torch/torch.h>

#include "v2f/config.hpp"
#include "v2f/encoders.hpp"
#include "v2f/evaluation.hpp"
#include "v2f/gan.hpp"
#include "v2f/matching.hpp"
#include "v2f/rng.hpp"
#include "v2f/sinc.hpp"

namespace {

void BM_SincKernels(benchmark::State &state) {
  const auto p = v2f::PaperPreset();
  v2f::SincConv sinc(p.speech.sinc, p.speech.sample_rate);
  torch::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(sinc->Kernels());
}
BENCHMARK(BM_SincKernels);

void BM_SpeechEncoder(benchmark::State &state) {
  const auto p = v2f::ToyPreset();
  torch::manual_seed(0);
  v2f::SpeechEncoder enc(p.speech);
  enc->eval();
  v2f::Rng rng(0);
  auto waves = rng.NormalTensor({state.range(0), p.audio.SegmentLength()}) * 0.01;
  torch::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(enc->forward(waves));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SpeechEncoder)->Arg(1)->Arg(8);

void BM_FaceEncoder(benchmark::State &state) {
  const auto p = v2f::ToyPreset();
  torch::manual_seed(0);
  v2f::FaceEncoder enc(p.face);
  enc->eval();
  v2f::Rng rng(0);
  auto faces = rng.NormalTensor({state.range(0), 3, p.face.image_size, p.face.image_size});
  torch::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(enc->forward(faces));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FaceEncoder)->Arg(1)->Arg(8);

void BM_Generate(benchmark::State &state) {
  const auto p = v2f::ToyPreset();
  torch::manual_seed(0);
  v2f::Generator g(p.generator);
  g->eval();
  v2f::Rng rng(0);
  auto z = v2f::SampleLatent(state.range(0), p.generator.z_dim, rng, 1.0);
  auto c = rng.NormalTensor({state.range(0), p.generator.c_dim});
  for (auto _ : state) benchmark::DoNotOptimize(v2f::Generate(g, z, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(1)->Arg(16);

void BM_MatchingLoss(benchmark::State &state) {
  v2f::Rng rng(0);
  const int64_t k = state.range(0);
  auto anchors = torch::nn::functional::normalize(rng.NormalTensor({64, 128}),
                                                  torch::nn::functional::NormalizeFuncOptions().dim(1));
  auto cands = torch::nn::functional::normalize(rng.NormalTensor({64, k, 128}),
                                                torch::nn::functional::NormalizeFuncOptions().dim(2));
  auto pos = torch::zeros({64}, torch::kInt64);
  for (auto _ : state)
    benchmark::DoNotOptimize(v2f::MatchingLossFromEmbeddings(anchors, cands, pos));
}
BENCHMARK(BM_MatchingLoss)->Arg(2)->Arg(10);

void BM_Retrieval(benchmark::State &state) {
  v2f::Rng rng(0);
  const int64_t gallery_size = state.range(0);
  auto gallery = rng.NormalTensor({gallery_size, 128});
  auto queries = rng.NormalTensor({100, 128});
  std::vector<std::string> gl, ql;
  for (int64_t i = 0; i < gallery_size; ++i) gl.push_back(std::to_string(i % 100));
  for (int64_t i = 0; i < 100; ++i) ql.push_back(std::to_string(i));
  for (auto _ : state)
    benchmark::DoNotOptimize(v2f::RetrievalFromEmbeddings(queries, ql, gallery, gl,
                                                          v2f::DistanceMetric::kCosine));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_Retrieval)->Arg(500)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
