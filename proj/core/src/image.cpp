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

#include "v2f/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "v2f/error.hpp"

namespace v2f {

namespace F = torch::nn::functional;

torch::Tensor ReadPng(const std::filesystem::path &path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    Fail(ErrorKind::kData, "cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    Fail(ErrorKind::kData, "cannot decode PNG " + path.string() + ": " + image.message);
  }
  const int64_t h = image.height, w = image.width;
  auto hwc = torch::from_blob(buffer.data(), {h, w, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).contiguous();
}

void WritePng(const std::filesystem::path &path, const torch::Tensor &pixels) {
  Require(pixels.dim() == 3 && pixels.size(0) == 3, ErrorKind::kInvalidInput,
          "WritePng expects a [3, H, W] tensor");
  auto hwc = ((pixels.detach().to(torch::kFloat32).clamp(-1.0, 1.0) + 1.0) * 127.5)
                 .round()
                 .to(torch::kUInt8)
                 .permute({1, 2, 0})
                 .contiguous();
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(hwc.size(1));
  image.height = static_cast<png_uint_32>(hwc.size(0));
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, hwc.data_ptr<uint8_t>(), 0,
                               nullptr))
    Fail(ErrorKind::kData, "cannot write PNG " + path.string() + ": " + image.message);
}

torch::Tensor HorizontalFlip(const torch::Tensor &pixels) {
  return pixels.flip({-1});
}

FaceImage PreprocessImage(const torch::Tensor &raw, const ImageConfig &config,
                          Rng &rng, bool augment) {
  Require(raw.dim() == 3 && raw.size(0) == 3, ErrorKind::kInvalidInput,
          "face image must be a [3, H, W] tensor");
  Require(raw.size(1) == raw.size(2), ErrorKind::kInvalidInput,
          "face image must be square, got " + std::to_string(raw.size(1)) + "x" +
              std::to_string(raw.size(2)));
  Require(raw.size(1) >= config.size, ErrorKind::kInvalidInput,
          "face image smaller than target size " + std::to_string(config.size));
  // Map to [-1, 1] before resizing: the resize is affine-invariant, and a
  // constant mid-gray then stays exactly at 0 instead of picking up rounding.
  torch::Tensor x = (raw.to(torch::kFloat32) / 127.5 - 1.0).unsqueeze(0);
  if (raw.size(1) != config.size) {
    x = F::interpolate(x, F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{config.size, config.size})
                              .mode(torch::kBilinear)
                              .align_corners(false)
                              .antialias(true));
  }
  x = x.squeeze(0).clamp(-1.0, 1.0);
  if (augment && config.augment_flip && rng.Bernoulli(0.5)) x = HorizontalFlip(x);
  return FaceImage{x.contiguous()};
}

torch::Tensor Mosaic(const torch::Tensor &images, int64_t cols, int64_t padding) {
  Require(images.dim() == 4 && images.size(1) == 3, ErrorKind::kInvalidInput,
          "Mosaic expects [N, 3, S, S]");
  const int64_t n = images.size(0), h = images.size(2), w = images.size(3);
  cols = std::max<int64_t>(1, std::min(cols, n));
  const int64_t rows = (n + cols - 1) / cols;
  auto grid = torch::full({3, rows * (h + padding) + padding, cols * (w + padding) + padding},
                          -1.0f);
  for (int64_t i = 0; i < n; ++i) {
    const int64_t r = i / cols, c = i % cols;
    grid.narrow(1, padding + r * (h + padding), h)
        .narrow(2, padding + c * (w + padding), w)
        .copy_(images[i].detach().to(torch::kFloat32));
  }
  return grid;
}

void WriteScatterPng(const std::filesystem::path &path, std::span<const double> xs,
                     std::span<const double> ys, int size) {
  Require(xs.size() == ys.size(), ErrorKind::kInvalidInput,
          "scatter x/y length mismatch");
  auto canvas = torch::ones({3, size, size});
  const int margin = 8;
  auto bounds = [](std::span<const double> v) {
    double lo = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
    double hi = v.empty() ? 1.0 : *std::max_element(v.begin(), v.end());
    if (hi - lo < 1e-12) hi = lo + 1.0;
    return std::pair{lo, hi};
  };
  const auto [x0, x1] = bounds(xs);
  const auto [y0, y1] = bounds(ys);
  auto acc = canvas.accessor<float, 3>();
  for (int i = margin; i < size - margin; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      acc[ch][size - margin][i] = -1.0f;  // x axis
      acc[ch][i][margin] = -1.0f;         // y axis
    }
  }
  const double span = size - 2 * margin - 1;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int px = margin + static_cast<int>(std::lround((xs[i] - x0) / (x1 - x0) * span));
    const int py = size - margin - 1 -
                   static_cast<int>(std::lround((ys[i] - y0) / (y1 - y0) * span));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int u = std::clamp(px + dx, 0, size - 1);
        const int v = std::clamp(py + dy, 0, size - 1);
        acc[0][v][u] = 0.6f;
        acc[1][v][u] = -0.6f;
        acc[2][v][u] = -0.6f;
      }
    }
  }
  WritePng(path, canvas);
}

}  // namespace v2f
