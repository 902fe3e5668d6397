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

#ifndef V2F_ENCODERS_HPP_
#define V2F_ENCODERS_HPP_

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "v2f/audio.hpp"
#include "v2f/config.hpp"
#include "v2f/image.hpp"
#include "v2f/sinc.hpp"

namespace v2f {

constexpr int64_t kEmbeddingDim = 128;

enum class EmbeddingRole { kSpeech, kFace, kCondition, kDiscriminatorFeature };

// A single 128-dim embedding vector (1-D tensor) tagged with its role.
struct Embedding {
  torch::Tensor values;
  EmbeddingRole role = EmbeddingRole::kSpeech;
};

// Conv1d -> BatchNorm1d -> per-channel PReLU.
class ConvBlockImpl : public torch::nn::Module {
 public:
  ConvBlockImpl(int in_channels, int out_channels, int kernel, int stride);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::Conv1d conv{nullptr};
  torch::nn::BatchNorm1d bn{nullptr};
  torch::nn::PReLU act{nullptr};
};
TORCH_MODULE(ConvBlock);

// Raw-waveform speech encoder: sinc front-end, conv blocks, temporal
// average pooling and a linear projection to the embedding.
class SpeechEncoderImpl : public torch::nn::Module {
 public:
  explicit SpeechEncoderImpl(const SpeechEncoderConfig &config);

  // waves: [B, T] -> [B, embedding_dim]. Throws kInvalidInput when T is
  // shorter than the receptive field.
  torch::Tensor forward(torch::Tensor waves);

  // Frame-level features before pooling, [B, C, T'].
  torch::Tensor Features(torch::Tensor waves);

  int64_t ReceptiveField() const;
  int64_t OutputFrames(int64_t input_length) const;
  const SpeechEncoderConfig &config() const { return config_; }
  SincConv sinc{nullptr};

 private:
  SpeechEncoderConfig config_;
  torch::nn::ModuleList blocks;
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(SpeechEncoder);

// Residual block of the face encoder; the first block of the trunk skips the
// leading activation.
class FaceResBlockImpl : public torch::nn::Module {
 public:
  FaceResBlockImpl(int in_channels, int out_channels, bool downsample,
                   bool first);
  torch::Tensor forward(torch::Tensor x);

 private:
  bool downsample_, first_, learnable_shortcut_;
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, shortcut{nullptr};
};
TORCH_MODULE(FaceResBlock);

// Residual 2d-CNN face encoder; global sum pooling then a linear head.
class FaceEncoderImpl : public torch::nn::Module {
 public:
  explicit FaceEncoderImpl(const FaceEncoderConfig &config);

  // faces: [B, 3, S, S] -> [B, embedding_dim].
  torch::Tensor forward(torch::Tensor faces);
  // Activated feature map right before global sum pooling.
  torch::Tensor Trunk(torch::Tensor faces);

  const FaceEncoderConfig &config() const { return config_; }

 private:
  FaceEncoderConfig config_;
  torch::nn::ModuleList blocks;
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(FaceEncoder);

// Eval-mode, no-grad single-item encoders.
Embedding SpeechEncode(SpeechEncoder &encoder, const AudioWaveform &wave);
Embedding FaceEncode(FaceEncoder &encoder, const FaceImage &face);

// Evaluates [N, ...] inputs in eval mode and no-grad, in chunks.
torch::Tensor EncodeSpeechBatch(SpeechEncoder &encoder, const torch::Tensor &waves,
                                int64_t chunk = 64);
torch::Tensor EncodeFaceBatch(FaceEncoder &encoder, const torch::Tensor &faces,
                              int64_t chunk = 128);

// Restores train/eval mode on scope exit.
class ModeGuard {
 public:
  ModeGuard(torch::nn::Module &m, bool train) : m_(m), was_(m.is_training()) {
    m_.train(train);
  }
  ~ModeGuard() { m_.train(was_); }
  ModeGuard(const ModeGuard &) = delete;
  ModeGuard &operator=(const ModeGuard &) = delete;

 private:
  torch::nn::Module &m_;
  bool was_;
};

}  // namespace v2f

#endif  // V2F_ENCODERS_HPP_
