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

#include "v2f/error.hpp"
#include "v2f/gan.hpp"

namespace v2f {

torch::Tensor RelativisticScore(const torch::Tensor &g_a, const torch::Tensor &g_b) {
  return g_a - g_b;
}

GanScores RelidScoresFromFeatures(const torch::Tensor &phi_real, const torch::Tensor &phi_fake,
                                  const torch::Tensor &psi_real, const torch::Tensor &psi_fake,
                                  const torch::Tensor &c_pos, const torch::Tensor &c_neg,
                                  bool mismatched_identity) {
  auto proj_real = (c_pos * phi_real).sum(1);
  auto proj_fake = (c_pos * phi_fake).sum(1);
  auto g_real = proj_real + psi_real;
  auto g_fake = proj_fake + psi_fake;
  GanScores s{RelativisticScore(g_real, g_fake), RelativisticScore(g_fake, g_real)};
  if (mismatched_identity) {
    s.d_score = s.d_score + (proj_real - (c_neg * phi_real).sum(1));
    s.g_score = s.g_score + (proj_fake - (c_neg * phi_fake).sum(1));
  }
  return s;
}

GanScores RelidScores(Discriminator &d, const torch::Tensor &real, const torch::Tensor &fake,
                      const torch::Tensor &c_pos, const torch::Tensor &c_neg,
                      bool mismatched_identity) {
  Require(real.sizes() == fake.sizes(), ErrorKind::kInvalidInput,
          "real and fake batches must have the same shape");
  Require(c_pos.sizes() == c_neg.sizes(), ErrorKind::kInvalidInput,
          "positive and negative conditions must have the same shape");
  auto phi_real = d->Phi(real);
  auto phi_fake = d->Phi(fake);
  return RelidScoresFromFeatures(phi_real, phi_fake, d->psi(phi_real).squeeze(1),
                                 d->psi(phi_fake).squeeze(1), c_pos, c_neg,
                                 mismatched_identity);
}

torch::Tensor NonSaturatingLoss(const torch::Tensor &score) {
  return torch::softplus(-score).mean();
}

torch::Tensor R1Penalty(const std::function<torch::Tensor(const torch::Tensor &)> &score,
                        const torch::Tensor &real, double gamma) {
  auto x = real.detach().requires_grad_(true);
  auto out = score(x);
  if (!out.requires_grad()) return torch::zeros({}, real.options());
  auto grads = torch::autograd::grad({out.sum()}, {x}, /*grad_outputs=*/{},
                                     /*retain_graph=*/true, /*create_graph=*/true,
                                     /*allow_unused=*/true);
  if (!grads[0].defined()) return torch::zeros({}, real.options());
  return 0.5 * gamma * grads[0].pow(2).flatten(1).sum(1).mean();
}

torch::Tensor R1Penalty(Discriminator &d, const torch::Tensor &real, const torch::Tensor &c,
                        double gamma) {
  return R1Penalty([&](const torch::Tensor &x) { return d->forward(x, c); }, real, gamma);
}

torch::Tensor TruncateLatent(const torch::Tensor &z, double threshold, Rng &rng) {
  Require(threshold > 0.0, ErrorKind::kInvalidInput, "truncation threshold must be positive");
  auto out = z.detach().to(torch::kFloat64).contiguous().clone();
  auto *p = out.data_ptr<double>();
  for (int64_t i = 0; i < out.numel(); ++i)
    while (std::abs(p[i]) > threshold) p[i] = rng.Normal();
  return out.to(z.scalar_type());
}

torch::Tensor SampleLatent(int64_t n, int64_t dim, Rng &rng, std::optional<double> truncation) {
  auto z = rng.NormalTensor({n, dim}, torch::kFloat64);
  if (truncation) z = TruncateLatent(z, *truncation, rng);
  return z.to(torch::kFloat32);
}

torch::Tensor Generate(Generator &g, const torch::Tensor &z, const torch::Tensor &c) {
  torch::NoGradGuard no_grad;
  ModeGuard guard(*g, false);
  return g->forward(z, c);
}

}  // namespace v2f
