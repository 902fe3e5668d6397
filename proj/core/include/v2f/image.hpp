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

#ifndef V2F_IMAGE_HPP_
#define V2F_IMAGE_HPP_

#include <filesystem>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "v2f/config.hpp"
#include "v2f/rng.hpp"

namespace v2f {

// Square RGB face, float32 [3, S, S] with values in [-1, 1].
struct FaceImage {
  torch::Tensor pixels;

  int64_t Size() const { return pixels.size(-1); }
};

// Decodes a PNG to a float tensor [3, H, W] with values in [0, 255].
// Grey inputs are replicated to three channels; alpha is dropped.
torch::Tensor ReadPng(const std::filesystem::path &path);

// pixels: [3, H, W] in [-1, 1] (values are clamped).
void WritePng(const std::filesystem::path &path, const torch::Tensor &pixels);

// raw: [3, H, W] in [0, 255], square, at least config.size on a side.
// Antialiased resize to config.size, map to [-1, 1], then horizontal flip
// with probability 0.5 when augment is set.
FaceImage PreprocessImage(const torch::Tensor &raw, const ImageConfig &config,
                          Rng &rng, bool augment);

torch::Tensor HorizontalFlip(const torch::Tensor &pixels);

// Tiles [N, 3, S, S] images into a grid with the given number of columns.
torch::Tensor Mosaic(const torch::Tensor &images, int64_t cols,
                     int64_t padding = 1);

// Renders a scatter plot of (x, y) points as a PNG; axes span the data
// range.
void WriteScatterPng(const std::filesystem::path &path,
                     std::span<const double> xs, std::span<const double> ys,
                     int size = 256);

}  // namespace v2f

#endif  // V2F_IMAGE_HPP_
