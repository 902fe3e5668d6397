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

#include "v2f/rng.hpp"

#include <sstream>

#include "v2f/error.hpp"

namespace v2f {

std::size_t Rng::Index(std::size_t n) {
  Require(n > 0, ErrorKind::kInvalidInput, "Rng::Index on empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::int64_t Rng::Int(std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(engine_);
}

double Rng::Uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

double Rng::Normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

bool Rng::Bernoulli(double p) { return Uniform() < p; }

std::vector<std::size_t> Rng::SampleWithoutReplacement(
    const std::vector<std::size_t> &pool, std::size_t k) {
  Require(k <= pool.size(), ErrorKind::kInsufficientData,
          "cannot draw " + std::to_string(k) + " distinct items from " +
              std::to_string(pool.size()));
  std::vector<std::size_t> v = pool;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + Index(v.size() - i);
    std::swap(v[i], v[j]);
  }
  v.resize(k);
  return v;
}

torch::Tensor Rng::NormalTensor(at::IntArrayRef shape, torch::Dtype dtype) {
  auto out = torch::empty(shape, torch::TensorOptions().dtype(torch::kFloat64));
  double *p = out.data_ptr<double>();
  for (int64_t i = 0; i < out.numel(); ++i) p[i] = Normal();
  return out.to(dtype);
}

std::string Rng::SaveState() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::LoadState(const std::string &state) {
  std::istringstream is(state);
  is >> engine_;
  Require(!is.fail(), ErrorKind::kCheckpointMismatch, "corrupt rng state");
}

}  // namespace v2f
