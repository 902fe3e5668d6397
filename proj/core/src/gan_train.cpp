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
#include <cstdio>
#include <fstream>

#include "v2f/error.hpp"
#include "v2f/gan.hpp"
#include "v2f/image.hpp"

namespace v2f {

using nlohmann::json;

void to_json(json &j, const GanLogEntry &e) {
  j = json{{"iter", e.iter},
           {"L_D", e.loss_d},
           {"L_G", e.loss_g},
           {"r1", e.r1},
           {"grad_norms", {{"G", e.grad_norm_g}, {"D", e.grad_norm_d}}}};
}

namespace {

double GradNorm(const std::vector<torch::Tensor> &params) {
  double sq = 0.0;
  for (const auto &p : params)
    if (p.grad().defined()) sq += p.grad().pow(2).sum().item<double>();
  return std::sqrt(sq);
}

struct TripletBatch {
  torch::Tensor real;   // [B, 3, S, S]
  torch::Tensor c_pos;  // [B, D]
  torch::Tensor c_neg;  // [B, D]
};

// Draws (f_real, c+, c-) triplets and encodes conditions, optionally from a
// bank of pre-encoded windows.
class TripletSampler {
 public:
  TripletSampler(const GanTrainConfig &config, GanNetworks &nets, const MediaStore &store,
                 const ClipCatalog &catalog, const std::vector<std::size_t> &pool, Rng &rng)
      : config_(config), nets_(nets), store_(store), catalog_(catalog), pool_(pool) {
    bool two_identities = false;
    for (std::size_t c : pool)
      two_identities |= catalog.identities[c] != catalog.identities[pool.front()];
    Require(two_identities, ErrorKind::kInsufficientData,
            "GAN training needs clips of at least two identities");
    for (std::size_t c : pool)
      Require(catalog.n_frames[c] >= 2, ErrorKind::kInsufficientData,
              "clip " + catalog.clip_ids[c] + " has fewer than two frames");
    if (config.freeze_speech_encoder && config.condition_bank_per_clip > 0) BuildBank(rng);
  }

  TripletBatch Sample(std::size_t batch_size, Rng &rng) {
    std::vector<std::size_t> clips(batch_size);
    for (auto &c : clips) c = pool_[rng.Index(pool_.size())];
    std::vector<MediaRef> real, pos, neg;
    for (std::size_t i = 0; i < batch_size; ++i) {
      const std::size_t nf = catalog_.n_frames[clips[i]];
      const std::size_t fr = rng.Index(nf);
      const std::size_t fs = (fr + 1 + rng.Index(nf - 1)) % nf;
      real.push_back({clips[i], fr});
      pos.push_back({clips[i], fs});
      const std::size_t nc = NegativeClip(clips, i, rng);
      neg.push_back({nc, rng.Index(catalog_.n_frames[nc])});
    }
    TripletBatch b;
    b.real = store_.Frames(real, rng, /*augment=*/true);
    b.c_pos = Encode(pos, rng);
    b.c_neg = Encode(neg, rng);
    return b;
  }

  torch::Tensor Encode(const std::vector<MediaRef> &refs, Rng &rng) {
    if (!bank_.empty()) {
      std::vector<torch::Tensor> rows;
      for (const auto &r : refs)
        rows.push_back(bank_[r.clip][static_cast<int64_t>(rng.Index(bank_[r.clip].size(0)))]
                            [static_cast<int64_t>(r.frame)]);
      return torch::stack(rows);
    }
    auto waves = store_.Waveforms(refs, rng);
    ModeGuard guard(*nets_.speech, false);
    if (config_.freeze_speech_encoder) {
      torch::NoGradGuard no_grad;
      return nets_.speech->forward(waves);
    }
    return nets_.speech->forward(waves);
  }

 private:
  // Other batch clips of a different identity first, then the whole pool.
  std::size_t NegativeClip(const std::vector<std::size_t> &clips, std::size_t i, Rng &rng) {
    const auto &id = catalog_.identities[clips[i]];
    std::vector<std::size_t> candidates;
    for (std::size_t c : clips)
      if (catalog_.identities[c] != id) candidates.push_back(c);
    if (!candidates.empty()) return candidates[rng.Index(candidates.size())];
    for (;;) {
      const std::size_t c = pool_[rng.Index(pool_.size())];
      if (catalog_.identities[c] != id) return c;
    }
  }

  void BuildBank(Rng &rng) {
    bank_.resize(store_.size());
    for (std::size_t clip : pool_) {
      if (bank_[clip].defined()) continue;
      std::vector<MediaRef> refs;
      for (int m = 0; m < config_.condition_bank_per_clip; ++m)
        for (std::size_t f = 0; f < catalog_.n_frames[clip]; ++f) refs.push_back({clip, f});
      auto enc = EncodeSpeechBatch(nets_.speech, store_.Waveforms(refs, rng));
      bank_[clip] = enc.view({config_.condition_bank_per_clip,
                              static_cast<int64_t>(catalog_.n_frames[clip]), -1});
    }
  }

  const GanTrainConfig &config_;
  GanNetworks &nets_;
  const MediaStore &store_;
  const ClipCatalog &catalog_;
  const std::vector<std::size_t> &pool_;
  std::vector<torch::Tensor> bank_;  // per clip [M, n_frames, D]
};

}  // namespace

GanTrainResult TrainGan(const GanTrainConfig &config, GanNetworks &nets,
                        const MediaStore &store, const ClipCatalog &catalog,
                        const std::vector<std::size_t> &pool, Rng &rng,
                        const GanTrainOptions &options) {
  Require(!pool.empty(), ErrorKind::kConfig, "empty GAN training pool");
  Require(config.d_steps_per_g >= 1 && config.batch_size >= 1 && config.r1_interval >= 1,
          ErrorKind::kConfig, "invalid GAN schedule");
  auto &g = nets.generator;
  auto &d = nets.discriminator;

  for (auto &p : nets.speech->parameters()) p.set_requires_grad(!config.freeze_speech_encoder);
  for (auto &p : d->phi->parameters()) p.set_requires_grad(!config.freeze_face_trunk);

  std::vector<torch::Tensor> d_params;
  for (auto &p : d->parameters())
    if (p.requires_grad()) d_params.push_back(p);
  if (!config.freeze_speech_encoder)
    for (auto &p : nets.speech->parameters()) d_params.push_back(p);
  auto g_params = g->parameters();
  torch::optim::Adam opt_g(g_params, torch::optim::AdamOptions(config.lr_g).betas(
                                         {config.adam_beta1, config.adam_beta2}));
  torch::optim::Adam opt_d(d_params, torch::optim::AdamOptions(config.lr_d).betas(
                                         {config.adam_beta1, config.adam_beta2}));

  TripletSampler sampler(config, nets, store, catalog, pool, rng);
  const int64_t z_dim = g->config().z_dim;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  std::ofstream log_file;
  torch::Tensor grid_z, grid_c;
  if (!options.output_dir.empty()) {
    std::filesystem::create_directories(options.output_dir / "samples");
    log_file.open(options.output_dir / "log.jsonl");
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(options.grid_size), pool.size());
    std::vector<MediaRef> refs;
    for (std::size_t i = 0; i < n; ++i) refs.push_back({pool[i], 0});
    Rng grid_rng(rng.NextU64());
    grid_z = SampleLatent(static_cast<int64_t>(n), z_dim, grid_rng);
    torch::NoGradGuard no_grad;
    grid_c = sampler.Encode(refs, grid_rng).detach();
  }

  GanTrainResult result;
  g->train();
  d->train();
  int d_step = 0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    GanLogEntry entry;
    entry.iter = iter;
    for (int s = 0; s < config.d_steps_per_g; ++s) {
      auto b = sampler.Sample(batch, rng);
      torch::Tensor fake;
      {
        torch::NoGradGuard no_grad;
        fake = g->forward(SampleLatent(b.real.size(0), z_dim, rng), b.c_pos.detach());
      }
      opt_d.zero_grad();
      auto scores = RelidScores(d, b.real, fake, b.c_pos, b.c_neg,
                                config.use_mismatched_identity_loss);
      auto loss = DiscriminatorLoss(scores);
      auto total = loss;
      if (config.r1_gamma > 0.0 && d_step % config.r1_interval == 0) {
        auto r1 = R1Penalty(d, b.real, b.c_pos, config.r1_gamma * config.r1_interval);
        total = total + r1;
        entry.r1 = r1.item<double>() / config.r1_interval;
      }
      total.backward();
      entry.grad_norm_d = GradNorm(d_params);
      opt_d.step();
      entry.loss_d = loss.item<double>();
      ++d_step;
    }

    auto b = sampler.Sample(batch, rng);
    auto c_pos = b.c_pos.detach();
    auto fake = g->forward(SampleLatent(b.real.size(0), z_dim, rng), c_pos);
    opt_g.zero_grad();
    auto scores = RelidScores(d, b.real, fake, c_pos, b.c_neg.detach(),
                              config.use_mismatched_identity_loss);
    auto loss_g = GeneratorLoss(scores);
    loss_g.backward();
    entry.grad_norm_g = GradNorm(g_params);
    opt_g.step();
    entry.loss_g = loss_g.item<double>();
    result.iters_run = iter;

    if (config.log_every > 0 && (iter % config.log_every == 0 || iter == config.max_iters)) {
      result.log.push_back(entry);
      if (log_file) log_file << json(entry).dump() << '\n' << std::flush;
      if (options.on_log) options.on_log(entry);
    }
    if (grid_z.defined() && config.sample_every > 0 &&
        (iter % config.sample_every == 0 || iter == config.max_iters)) {
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%07d.png", iter);
      auto images = Generate(g, grid_z, grid_c);
      WritePng(options.output_dir / "samples" / name,
               Mosaic(images, static_cast<int64_t>(std::ceil(std::sqrt(images.size(0)))), 1));
    }
  }
  g->eval();
  d->eval();
  return result;
}

}  // namespace v2f
