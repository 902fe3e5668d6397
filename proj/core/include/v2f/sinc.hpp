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

#ifndef V2F_SINC_HPP_
#define V2F_SINC_HPP_

#include <torch/torch.h>

#include "v2f/config.hpp"

namespace v2f {

// Realized band edges of a sinc filter bank, in Hz.
struct SincCutoffs {
  torch::Tensor low;
  torch::Tensor high;
};

// Learnable band-pass front-end. Filter i is a Hamming-windowed difference
// of two ideal low-pass sinc kernels with cutoffs (low_i, high_i); only the
// two edges per filter are trained.
//
// Edges are kept at least one guard band (2 fs / kernel_size) away from DC,
// from Nyquist and from each other, which keeps each realized kernel a true
// band-pass filter for any parameter value.
class SincConvImpl : public torch::nn::Module {
 public:
  SincConvImpl(const SincConfig &config, int sample_rate);

  // x: [B, T] or [B, 1, T]; returns [B, n_filters, ceil(T / stride)].
  torch::Tensor forward(torch::Tensor x);

  // [n_filters, 1, kernel_size].
  torch::Tensor Kernels() const;
  SincCutoffs Cutoffs() const;

  double guard_hz() const { return guard_hz_; }
  int sample_rate() const { return sample_rate_; }
  const SincConfig &config() const { return config_; }

  torch::Tensor low_hz, band_hz;

 private:
  SincConfig config_;
  int sample_rate_;
  double guard_hz_;
  torch::Tensor taps_;    // 1..(K-1)/2, in samples
  torch::Tensor window_;  // Hamming, length K
};
TORCH_MODULE(SincConv);

// Mel-spaced band edges over [low_hz, sample_rate / 2]; n_filters + 1 points.
std::vector<double> MelBandEdges(int n_filters, double low_hz, int sample_rate);

}  // namespace v2f

#endif  // V2F_SINC_HPP_
