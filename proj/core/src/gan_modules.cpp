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

#include "v2f/checkpoint.hpp"
#include "v2f/error.hpp"
#include "v2f/gan.hpp"

namespace v2f {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

torch::Tensor AdaIN(const torch::Tensor &x, const torch::Tensor &scale,
                    const torch::Tensor &bias, double eps) {
  Require(x.dim() == 4, ErrorKind::kInvalidInput, "AdaIN expects [N, C, H, W]");
  Require(scale.dim() == 2 && bias.dim() == 2 && scale.size(0) == x.size(0) &&
              bias.size(0) == x.size(0) && scale.size(1) == x.size(1) &&
              bias.size(1) == x.size(1),
          ErrorKind::kInvalidInput, "AdaIN scale/bias must be [N, C]");
  // Statistics in double: feature maps whose offset dwarfs their spread
  // would otherwise lose the normalized signal to float32 cancellation.
  auto xd = x.to(torch::kFloat64);
  auto mean = xd.mean({2, 3}, /*keepdim=*/true);
  auto var = (xd - mean).pow(2).mean({2, 3}, /*keepdim=*/true);
  auto normed = ((xd - mean) / torch::sqrt(var + eps)).to(x.scalar_type());
  return normed * scale.unsqueeze(2).unsqueeze(3) + bias.unsqueeze(2).unsqueeze(3);
}

AdaINLayerImpl::AdaINLayerImpl(int channels, int c_dim, double eps)
    : channels_(channels), eps_(eps) {
  affine = register_module("affine", nn::Linear(c_dim, 2 * channels));
  torch::NoGradGuard no_grad;
  affine->weight.normal_(0.0, 0.1 / std::sqrt(static_cast<double>(c_dim)));
  affine->bias.zero_();
}

torch::Tensor AdaINLayerImpl::forward(const torch::Tensor &x, const torch::Tensor &c) {
  auto params = affine(c);
  auto scale = 1.0 + params.narrow(1, 0, channels_);
  auto bias = params.narrow(1, channels_, channels_);
  return AdaIN(x, scale, bias, eps_);
}

GenBlockImpl::GenBlockImpl(int in_channels, int out_channels, int c_dim, double eps) {
  norm1 = register_module("norm1", AdaINLayer(in_channels, c_dim, eps));
  conv1 = register_module(
      "conv1", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3).padding(1)));
  norm2 = register_module("norm2", AdaINLayer(out_channels, c_dim, eps));
  conv2 = register_module(
      "conv2", nn::Conv2d(nn::Conv2dOptions(out_channels, out_channels, 3).padding(1)));
  shortcut = register_module("shortcut",
                             nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 1)));
}

namespace {

torch::Tensor Upsample(const torch::Tensor &x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kNearest));
}

}  // namespace

torch::Tensor GenBlockImpl::forward(const torch::Tensor &x, const torch::Tensor &c) {
  auto h = conv1(Upsample(torch::relu(norm1(x, c))));
  h = conv2(torch::relu(norm2(h, c)));
  return h + shortcut(Upsample(x));
}

GeneratorImpl::GeneratorImpl(const GeneratorConfig &config) : config_(config) {
  Require(!config.channels.empty(), ErrorKind::kConfig, "generator needs at least one block");
  const int r = config.base_resolution;
  input = register_module(
      "input", nn::Linear(config.z_dim + config.c_dim, config.base_channels * r * r));
  blocks = register_module("blocks", nn::ModuleList());
  int in = config.base_channels;
  for (int out : config.channels) {
    blocks->push_back(GenBlock(in, out, config.c_dim, config.adain_eps));
    in = out;
  }
  out_norm = register_module("out_norm", AdaINLayer(in, config.c_dim, config.adain_eps));
  out_conv = register_module("out_conv", nn::Conv2d(nn::Conv2dOptions(in, 3, 3).padding(1)));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor &z, const torch::Tensor &c) {
  Require(z.dim() == 2 && z.size(1) == config_.z_dim, ErrorKind::kInvalidInput,
          "latent must be [N, " + std::to_string(config_.z_dim) + "]");
  Require(c.dim() == 2 && c.size(1) == config_.c_dim && c.size(0) == z.size(0),
          ErrorKind::kInvalidInput,
          "condition must be [N, " + std::to_string(config_.c_dim) + "] matching the latent");
  const int r = config_.base_resolution;
  auto h = input(torch::cat({z, c}, 1)).view({z.size(0), config_.base_channels, r, r});
  for (auto &m : *blocks) h = m->as<GenBlock>()->forward(h, c);
  return torch::tanh(out_conv(torch::relu(out_norm(h, c))));
}

DiscriminatorImpl::DiscriminatorImpl(const FaceEncoderConfig &config) {
  phi = register_module("phi", FaceEncoder(config));
  psi = register_module("psi", nn::Linear(config.embedding_dim, 1));
}

torch::Tensor DiscriminatorImpl::Phi(const torch::Tensor &faces) { return phi->forward(faces); }

torch::Tensor DiscriminatorImpl::ScoreFromFeatures(const torch::Tensor &features,
                                                   const torch::Tensor &c) {
  Require(c.sizes() == features.sizes(), ErrorKind::kInvalidInput,
          "condition and discriminator feature shapes differ");
  return (c * features).sum(1) + psi(features).squeeze(1);
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor &faces, const torch::Tensor &c) {
  return ScoreFromFeatures(Phi(faces), c);
}

GanNetworks MakeGanNetworks(const Preset &preset, const MatchingNetworks *pretrained) {
  GanNetworks nets{Generator(preset.generator), Discriminator(preset.face),
                   SpeechEncoder(preset.speech)};
  if (preset.gan.skip_transfer) return nets;
  Require(pretrained != nullptr, ErrorKind::kConfig,
          "encoder transfer requires inference-stage checkpoints (or skip_transfer)");
  CopyModuleState(*pretrained->speech, *nets.speech);
  CopyModuleState(*pretrained->face, *nets.discriminator->phi);
  return nets;
}

void SaveGanNetworks(const std::filesystem::path &dir, const Preset &preset, GanNetworks &nets,
                     const nlohmann::json &metadata) {
  std::filesystem::create_directories(dir);
  SaveCheckpoint(dir / "generator.ckpt", "generator", preset.generator, *nets.generator,
                 metadata);
  SaveCheckpoint(dir / "discriminator.ckpt", "discriminator", preset.face,
                 *nets.discriminator, metadata);
  SaveCheckpoint(dir / "speech_encoder.ckpt", "speech_encoder", preset.speech, *nets.speech,
                 metadata);
}

GanNetworks LoadGanNetworks(const std::filesystem::path &dir, const Preset &preset) {
  GanNetworks nets{Generator(preset.generator), Discriminator(preset.face),
                   SpeechEncoder(preset.speech)};
  LoadCheckpoint(dir / "generator.ckpt", "generator", preset.generator, *nets.generator);
  LoadCheckpoint(dir / "discriminator.ckpt", "discriminator", preset.face,
                 *nets.discriminator);
  LoadCheckpoint(dir / "speech_encoder.ckpt", "speech_encoder", preset.speech, *nets.speech);
  nets.generator->eval();
  nets.discriminator->eval();
  nets.speech->eval();
  return nets;
}

}  // namespace v2f
