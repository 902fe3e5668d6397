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

#include "v2f/sinc.hpp"

#include <cmath>
#include <numbers>

#include "v2f/error.hpp"

namespace v2f {

namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

std::vector<double> MelBandEdges(int n_filters, double low_hz, int sample_rate) {
  const double lo = HzToMel(low_hz), hi = HzToMel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_filters) + 1);
  for (int i = 0; i <= n_filters; ++i)
    edges[i] = MelToHz(lo + (hi - lo) * i / n_filters);
  return edges;
}

SincConvImpl::SincConvImpl(const SincConfig &config, int sample_rate)
    : config_(config), sample_rate_(sample_rate) {
  Require(config.kernel_size % 2 == 1, ErrorKind::kConfig,
          "sinc kernel_size must be odd (symmetric filters)");
  Require(config.kernel_size >= 13, ErrorKind::kConfig,
          "sinc kernel_size must be at least 13");
  Require(config.n_filters > 0 && config.stride > 0, ErrorKind::kConfig,
          "sinc n_filters and stride must be positive");
  guard_hz_ = 2.0 * sample_rate / config.kernel_size;

  const auto edges = MelBandEdges(config.n_filters, config.init_low_hz, sample_rate);
  std::vector<float> low(config.n_filters), band(config.n_filters);
  for (int i = 0; i < config.n_filters; ++i) {
    low[i] = static_cast<float>(edges[i]);
    band[i] = static_cast<float>(edges[i + 1] - edges[i]);
  }
  low_hz = register_parameter("low_hz", torch::tensor(low));
  band_hz = register_parameter("band_hz", torch::tensor(band));

  const int half = (config.kernel_size - 1) / 2;
  taps_ = register_buffer("taps", torch::arange(1, half + 1, torch::kFloat32));
  auto idx = torch::arange(config.kernel_size, torch::kFloat32);
  window_ = register_buffer(
      "window", 0.54 - 0.46 * torch::cos(2.0 * std::numbers::pi * idx /
                                         (config.kernel_size - 1)));
}

SincCutoffs SincConvImpl::Cutoffs() const {
  const double nyquist = sample_rate_ / 2.0;
  const double max_high = nyquist - guard_hz_;
  auto low = torch::clamp(guard_hz_ + torch::abs(low_hz), guard_hz_,
                          max_high - guard_hz_);
  auto high = torch::clamp_max(low + guard_hz_ + torch::abs(band_hz), max_high);
  return {low, high};
}

torch::Tensor SincConvImpl::Kernels() const {
  auto [low, high] = Cutoffs();
  const double fs = sample_rate_;
  auto n = taps_.to(low.dtype()).unsqueeze(0);  // [1, half]
  auto arg_hi = 2.0 * std::numbers::pi * high.unsqueeze(1) * n / fs;
  auto arg_lo = 2.0 * std::numbers::pi * low.unsqueeze(1) * n / fs;
  auto right = (torch::sin(arg_hi) - torch::sin(arg_lo)) / (std::numbers::pi * n);
  auto center = (2.0 * (high - low) / fs).unsqueeze(1);
  auto kernel = torch::cat({right.flip({1}), center, right}, 1);
  return (kernel * window_.to(low.dtype()).unsqueeze(0)).unsqueeze(1);
}

torch::Tensor SincConvImpl::forward(torch::Tensor x) {
  if (x.dim() == 2) x = x.unsqueeze(1);
  Require(x.dim() == 3 && x.size(1) == 1, ErrorKind::kInvalidInput,
          "sinc input must be [B, T] or [B, 1, T]");
  const int pad = (config_.kernel_size - 1) / 2;
  return torch::nn::functional::conv1d(
      x, Kernels().to(x.dtype()),
      torch::nn::functional::Conv1dFuncOptions().stride(config_.stride).padding(pad));
}

}  // namespace v2f
