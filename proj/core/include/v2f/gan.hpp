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

#ifndef V2F_GAN_HPP_
#define V2F_GAN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "v2f/config.hpp"
#include "v2f/dataset.hpp"
#include "v2f/encoders.hpp"
#include "v2f/matching.hpp"
#include "v2f/rng.hpp"

namespace v2f {

// Instance normalization followed by a per-sample affine map.
// x: [N, C, H, W]; scale, bias: [N, C]. The std is sqrt(var + eps) with the
// biased spatial variance, so a constant channel maps to its bias.
torch::Tensor AdaIN(const torch::Tensor &x, const torch::Tensor &scale,
                    const torch::Tensor &bias, double eps = 1e-5);

// AdaIN whose scale and bias are an affine function of the condition.
class AdaINLayerImpl : public torch::nn::Module {
 public:
  AdaINLayerImpl(int channels, int c_dim, double eps);
  torch::Tensor forward(const torch::Tensor &x, const torch::Tensor &c);

 private:
  int channels_;
  double eps_;
  torch::nn::Linear affine{nullptr};
};
TORCH_MODULE(AdaINLayer);

// Residual up-sampling block, conditioned through two AdaIN layers.
class GenBlockImpl : public torch::nn::Module {
 public:
  GenBlockImpl(int in_channels, int out_channels, int c_dim, double eps);
  torch::Tensor forward(const torch::Tensor &x, const torch::Tensor &c);

 private:
  AdaINLayer norm1{nullptr}, norm2{nullptr};
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, shortcut{nullptr};
};
TORCH_MODULE(GenBlock);

// G(z, c): concat(z, c) -> linear -> base map -> up-sampling blocks ->
// AdaIN -> ReLU -> conv -> tanh.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorConfig &config);

  // z: [N, z_dim], c: [N, c_dim] -> [N, 3, S, S] in [-1, 1].
  torch::Tensor forward(const torch::Tensor &z, const torch::Tensor &c);
  const GeneratorConfig &config() const { return config_; }

 private:
  GeneratorConfig config_;
  torch::nn::Linear input{nullptr};
  torch::nn::ModuleList blocks;
  AdaINLayer out_norm{nullptr};
  torch::nn::Conv2d out_conv{nullptr};
};
TORCH_MODULE(Generator);

// Projection discriminator on a face-encoder trunk:
//   g(f, c) = c^T phi(f) + psi(phi(f)).
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const FaceEncoderConfig &config);

  torch::Tensor Phi(const torch::Tensor &faces);
  // [N] scores from precomputed features.
  torch::Tensor ScoreFromFeatures(const torch::Tensor &phi, const torch::Tensor &c);
  torch::Tensor forward(const torch::Tensor &faces, const torch::Tensor &c);

  FaceEncoder phi{nullptr};
  torch::nn::Linear psi{nullptr};
};
TORCH_MODULE(Discriminator);

// g_rel(a, b, c) = g(a, c) - g(b, c).
torch::Tensor RelativisticScore(const torch::Tensor &g_a, const torch::Tensor &g_b);

struct GanScores {
  torch::Tensor d_score;  // [N]
  torch::Tensor g_score;  // [N]
};

// Relativistic scores from precomputed features. With mismatched identity
// terms (mil) each score gains c_pos^T phi - c_neg^T phi on the face it
// favours; without them the scores are the plain relativistic ones.
GanScores RelidScoresFromFeatures(const torch::Tensor &phi_real, const torch::Tensor &phi_fake,
                                  const torch::Tensor &psi_real, const torch::Tensor &psi_fake,
                                  const torch::Tensor &c_pos, const torch::Tensor &c_neg,
                                  bool mismatched_identity = true);

GanScores RelidScores(Discriminator &d, const torch::Tensor &real, const torch::Tensor &fake,
                      const torch::Tensor &c_pos, const torch::Tensor &c_neg,
                      bool mismatched_identity = true);

// Mean of -log sigmoid(score), via softplus(-score).
torch::Tensor NonSaturatingLoss(const torch::Tensor &score);
inline torch::Tensor DiscriminatorLoss(const GanScores &s) { return NonSaturatingLoss(s.d_score); }
inline torch::Tensor GeneratorLoss(const GanScores &s) { return NonSaturatingLoss(s.g_score); }

// (gamma / 2) * mean_i ||d score(f_i) / d f_i||^2 on real samples. The
// result keeps its graph so it can be back-propagated into the scorer.
torch::Tensor R1Penalty(const std::function<torch::Tensor(const torch::Tensor &)> &score,
                        const torch::Tensor &real, double gamma);
torch::Tensor R1Penalty(Discriminator &d, const torch::Tensor &real, const torch::Tensor &c,
                        double gamma);

// Every component with |value| > threshold is redrawn from N(0, 1) until it
// falls inside.
torch::Tensor TruncateLatent(const torch::Tensor &z, double threshold, Rng &rng);
// [n, dim] standard normal latents, optionally truncated.
torch::Tensor SampleLatent(int64_t n, int64_t dim, Rng &rng,
                           std::optional<double> truncation = std::nullopt);

// No-grad generation.
torch::Tensor Generate(Generator &g, const torch::Tensor &z, const torch::Tensor &c);

// Networks of the generation stage. speech produces the condition c.
struct GanNetworks {
  Generator generator{nullptr};
  Discriminator discriminator{nullptr};
  SpeechEncoder speech{nullptr};
};

// Builds the generation-stage networks. Unless skip_transfer is set the
// speech encoder and the discriminator trunk are copied from pretrained,
// which is then required.
GanNetworks MakeGanNetworks(const Preset &preset, const MatchingNetworks *pretrained);

struct GanLogEntry {
  int iter = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double r1 = 0.0;
  double grad_norm_g = 0.0;
  double grad_norm_d = 0.0;
};
void to_json(nlohmann::json &j, const GanLogEntry &e);

struct GanTrainOptions {
  // Receives log.jsonl and sample grids; empty disables file output.
  std::filesystem::path output_dir;
  int grid_size = 8;
  std::function<void(const GanLogEntry &)> on_log;
};

struct GanTrainResult {
  std::vector<GanLogEntry> log;
  int iters_run = 0;
};

// Alternating Adam updates: d_steps_per_g discriminator steps (with R1) per
// generator step. Conditions come from speech windows of a different time
// frame than the real face; negatives from other identities.
GanTrainResult TrainGan(const GanTrainConfig &config, GanNetworks &nets,
                        const MediaStore &store, const ClipCatalog &catalog,
                        const std::vector<std::size_t> &pool, Rng &rng,
                        const GanTrainOptions &options = {});

// Checkpoint helpers for the three networks of a generation run.
void SaveGanNetworks(const std::filesystem::path &dir, const Preset &preset, GanNetworks &nets,
                     const nlohmann::json &metadata = nlohmann::json::object());
GanNetworks LoadGanNetworks(const std::filesystem::path &dir, const Preset &preset);

}  // namespace v2f

#endif  // V2F_GAN_HPP_
