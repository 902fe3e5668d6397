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

#include "v2f/encoders.hpp"

#include <cmath>

#include "v2f/error.hpp"

namespace v2f {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

// Small-gain head so untrained inner products start near zero and the
// K-way softmax starts near uniform.
void InitHead(nn::Linear &head, double gain) {
  torch::NoGradGuard no_grad;
  const double fan_in = static_cast<double>(head->weight.size(1));
  head->weight.normal_(0.0, gain / std::sqrt(fan_in));
  head->bias.zero_();
}

int SamePad(int kernel) { return (kernel - 1) / 2; }

}  // namespace

ConvBlockImpl::ConvBlockImpl(int in_channels, int out_channels, int kernel,
                             int stride)
    : conv(nn::Conv1dOptions(in_channels, out_channels, kernel)
               .stride(stride)
               .padding(SamePad(kernel))),
      bn(nn::BatchNorm1dOptions(out_channels)),
      act(nn::PReLUOptions().num_parameters(out_channels)) {
  register_module("conv", conv);
  register_module("bn", bn);
  register_module("act", act);
}

torch::Tensor ConvBlockImpl::forward(torch::Tensor x) {
  return act(bn(conv(x)));
}

SpeechEncoderImpl::SpeechEncoderImpl(const SpeechEncoderConfig &config)
    : config_(config) {
  Require(!config.channels.empty() && config.channels.size() == config.kernels.size() &&
              config.channels.size() == config.strides.size(),
          ErrorKind::kConfig, "speech encoder channels/kernels/strides mismatch");
  sinc = register_module("sinc", SincConv(config.sinc, config.sample_rate));
  int in = config.sinc.n_filters;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    blocks->push_back(ConvBlock(in, config.channels[i], config.kernels[i], config.strides[i]));
    in = config.channels[i];
  }
  register_module("blocks", blocks);
  head = register_module("head", nn::Linear(in, config.embedding_dim));
  InitHead(head, 0.5);
}

int64_t SpeechEncoderImpl::ReceptiveField() const {
  int64_t field = config_.sinc.kernel_size;
  int64_t jump = config_.sinc.stride;
  for (std::size_t i = 0; i < config_.kernels.size(); ++i) {
    field += (config_.kernels[i] - 1) * jump;
    jump *= config_.strides[i];
  }
  return field;
}

int64_t SpeechEncoderImpl::OutputFrames(int64_t length) const {
  auto out = [](int64_t n, int k, int s) { return (n + 2 * SamePad(k) - k) / s + 1; };
  length = out(length, config_.sinc.kernel_size, config_.sinc.stride);
  for (std::size_t i = 0; i < config_.kernels.size(); ++i)
    length = out(length, config_.kernels[i], config_.strides[i]);
  return length;
}

torch::Tensor SpeechEncoderImpl::Features(torch::Tensor waves) {
  Require(waves.dim() == 2, ErrorKind::kInvalidInput, "speech input must be [B, T]");
  Require(waves.size(1) >= ReceptiveField(), ErrorKind::kInvalidInput,
          "waveform of " + std::to_string(waves.size(1)) +
              " samples is shorter than the encoder receptive field (" +
              std::to_string(ReceptiveField()) + ")");
  auto x = sinc(waves);
  for (auto &block : *blocks) x = block->as<ConvBlock>()->forward(x);
  return x;
}

torch::Tensor SpeechEncoderImpl::forward(torch::Tensor waves) {
  return head(Features(waves).mean(2));
}

FaceResBlockImpl::FaceResBlockImpl(int in_channels, int out_channels,
                                   bool downsample, bool first)
    : downsample_(downsample),
      first_(first),
      learnable_shortcut_(first || downsample || in_channels != out_channels) {
  conv1 = register_module(
      "conv1", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3).padding(1)));
  conv2 = register_module(
      "conv2", nn::Conv2d(nn::Conv2dOptions(out_channels, out_channels, 3).padding(1)));
  if (learnable_shortcut_)
    shortcut = register_module(
        "shortcut", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 1)));
}

torch::Tensor FaceResBlockImpl::forward(torch::Tensor x) {
  auto h = first_ ? x : torch::relu(x);
  h = conv2(torch::relu(conv1(h)));
  if (downsample_) h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(2));
  auto s = x;
  if (learnable_shortcut_) {
    // Pool before the 1x1 conv on the stem block, after it elsewhere.
    if (first_ && downsample_) s = F::avg_pool2d(s, F::AvgPool2dFuncOptions(2));
    s = shortcut(s);
    if (!first_ && downsample_) s = F::avg_pool2d(s, F::AvgPool2dFuncOptions(2));
  }
  return h + s;
}

FaceEncoderImpl::FaceEncoderImpl(const FaceEncoderConfig &config) : config_(config) {
  Require(!config.channels.empty() && config.channels.size() == config.downsample.size(),
          ErrorKind::kConfig, "face encoder channels/downsample mismatch");
  int size = config.image_size;
  int in = 3;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    blocks->push_back(FaceResBlock(in, config.channels[i], config.downsample[i], i == 0));
    in = config.channels[i];
    if (config.downsample[i]) size /= 2;
  }
  Require(size >= 1, ErrorKind::kConfig, "face encoder downsamples below 1x1");
  register_module("blocks", blocks);
  head = register_module("head", nn::Linear(in, config.embedding_dim));
  InitHead(head, 0.5 / (size * size));
}

torch::Tensor FaceEncoderImpl::Trunk(torch::Tensor faces) {
  Require(faces.dim() == 4 && faces.size(1) == 3 &&
              faces.size(2) == config_.image_size && faces.size(3) == config_.image_size,
          ErrorKind::kInvalidInput,
          "face encoder expects [B, 3, " + std::to_string(config_.image_size) + ", " +
              std::to_string(config_.image_size) + "] input");
  auto x = faces;
  for (auto &block : *blocks) x = block->as<FaceResBlock>()->forward(x);
  return torch::relu(x);
}

torch::Tensor FaceEncoderImpl::forward(torch::Tensor faces) {
  return head(Trunk(faces).sum({2, 3}));
}

Embedding SpeechEncode(SpeechEncoder &encoder, const AudioWaveform &wave) {
  torch::NoGradGuard no_grad;
  ModeGuard mode(*encoder, false);
  auto p = encoder->parameters().front();
  auto x = torch::from_blob(const_cast<float *>(wave.samples.data()),
                            {1, static_cast<int64_t>(wave.samples.size())}, torch::kFloat32)
               .to(p.dtype());
  return {encoder->forward(x).squeeze(0), EmbeddingRole::kSpeech};
}

Embedding FaceEncode(FaceEncoder &encoder, const FaceImage &face) {
  torch::NoGradGuard no_grad;
  ModeGuard mode(*encoder, false);
  auto p = encoder->parameters().front();
  return {encoder->forward(face.pixels.unsqueeze(0).to(p.dtype())).squeeze(0),
          EmbeddingRole::kFace};
}

torch::Tensor EncodeSpeechBatch(SpeechEncoder &encoder, const torch::Tensor &waves,
                                int64_t chunk) {
  torch::NoGradGuard no_grad;
  ModeGuard mode(*encoder, false);
  std::vector<torch::Tensor> out;
  for (int64_t i = 0; i < waves.size(0); i += chunk)
    out.push_back(encoder->forward(waves.narrow(0, i, std::min(chunk, waves.size(0) - i))));
  return torch::cat(out);
}

torch::Tensor EncodeFaceBatch(FaceEncoder &encoder, const torch::Tensor &faces,
                              int64_t chunk) {
  torch::NoGradGuard no_grad;
  ModeGuard mode(*encoder, false);
  std::vector<torch::Tensor> out;
  for (int64_t i = 0; i < faces.size(0); i += chunk)
    out.push_back(encoder->forward(faces.narrow(0, i, std::min(chunk, faces.size(0) - i))));
  return torch::cat(out);
}

}  // namespace v2f
