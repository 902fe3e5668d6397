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

#ifndef V2F_RNG_HPP_
#define V2F_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace v2f {

// Seeded random source used for every sampling decision in the pipeline.
// Network initialisation is the only consumer of torch's global generator;
// everything else (batches, truncation offsets, flips, latents) comes from
// here so a run is reproducible from one seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform integer in [0, n).
  std::size_t Index(std::size_t n);
  // Uniform integer in [lo, hi].
  std::int64_t Int(std::int64_t lo, std::int64_t hi);
  double Uniform(double lo = 0.0, double hi = 1.0);
  double Normal(double mean = 0.0, double stddev = 1.0);
  bool Bernoulli(double p);

  // k distinct elements of pool, in random order.
  std::vector<std::size_t> SampleWithoutReplacement(
      const std::vector<std::size_t> &pool, std::size_t k);

  template <typename T>
  void Shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[Index(i)]);
  }

  // Float tensor of i.i.d. standard normals, drawn in row-major order.
  torch::Tensor NormalTensor(at::IntArrayRef shape,
                             torch::Dtype dtype = torch::kFloat32);

  // Child generator with an independent stream.
  Rng Fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

  std::string SaveState() const;
  void LoadState(const std::string &state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace v2f

#endif  // V2F_RNG_HPP_
