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

#include "v2f/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "v2f/checkpoint.hpp"
#include "v2f/error.hpp"

namespace v2f {

using nlohmann::json;

std::size_t ArgmaxLowestIndex(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

MatchResult MatchProbabilities(const Embedding &anchor,
                               std::span<const Embedding> candidates, MatchMode mode,
                               std::size_t positive_index) {
  Require(!candidates.empty(), ErrorKind::kInvalidInput, "no candidates to match");
  Require(anchor.values.dim() == 1, ErrorKind::kInvalidInput, "anchor must be a vector");
  const auto a = anchor.values.detach().to(torch::kFloat64).contiguous();
  std::vector<double> logits;
  logits.reserve(candidates.size());
  for (const auto &c : candidates) {
    Require(c.values.dim() == 1 && c.values.size(0) == a.size(0), ErrorKind::kInvalidInput,
            "embedding dimension mismatch: anchor " + std::to_string(a.size(0)) +
                ", candidate " + std::to_string(c.values.numel()));
    logits.push_back(torch::dot(a, c.values.detach().to(torch::kFloat64)).item<double>());
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  MatchResult r;
  r.mode = mode;
  r.positive_index = positive_index;
  r.probabilities.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) z += r.probabilities[j] = std::exp(logits[j] - m);
  for (auto &p : r.probabilities) p /= z;
  r.predicted_index = ArgmaxLowestIndex(logits);
  return r;
}

torch::Tensor MatchLogits(const torch::Tensor &anchors, const torch::Tensor &candidates) {
  Require(anchors.dim() == 2 && candidates.dim() == 3 &&
              anchors.size(0) == candidates.size(0) && anchors.size(1) == candidates.size(2),
          ErrorKind::kInvalidInput, "MatchLogits expects [B, D] and [B, K, D]");
  return torch::bmm(candidates, anchors.unsqueeze(2)).squeeze(2);
}

torch::Tensor MatchingLossFromEmbeddings(const torch::Tensor &anchors,
                                         const torch::Tensor &candidates,
                                         const torch::Tensor &positive_index) {
  Require(anchors.size(0) > 0, ErrorKind::kInvalidInput, "empty matching batch");
  auto log_p = torch::log_softmax(MatchLogits(anchors, candidates), 1);
  return -log_p.gather(1, positive_index.view({-1, 1})).mean();
}

MatchingNetworks MatchingNetworks::Create(const SpeechEncoderConfig &speech,
                                          const FaceEncoderConfig &face) {
  return {SpeechEncoder(speech), FaceEncoder(face)};
}

void MatchingNetworks::Train(bool on) {
  speech->train(on);
  face->train(on);
}

std::vector<torch::Tensor> MatchingNetworks::Parameters(bool include_speech) const {
  std::vector<torch::Tensor> params;
  if (include_speech)
    for (auto &p : speech->parameters()) params.push_back(p);
  for (auto &p : face->parameters()) params.push_back(p);
  return params;
}

EncodedBatch EncodeExamples(const std::vector<MatchingExample> &batch,
                            MatchingNetworks &nets, const MediaStore &store, Rng &rng,
                            bool augment) {
  Require(!batch.empty(), ErrorKind::kInvalidInput, "empty matching batch");
  const auto k = static_cast<int64_t>(batch.front().candidates.size());
  const auto b = static_cast<int64_t>(batch.size());
  const auto dtype = nets.face->parameters().front().scalar_type();
  std::vector<MediaRef> anchors, cands;
  std::vector<int64_t> positives;
  for (const auto &e : batch) {
    Require(static_cast<int64_t>(e.candidates.size()) == k, ErrorKind::kInvalidInput,
            "all examples of a batch must share K");
    anchors.push_back(e.anchor);
    cands.insert(cands.end(), e.candidates.begin(), e.candidates.end());
    positives.push_back(static_cast<int64_t>(e.positive_index));
  }
  EncodedBatch out;
  if (batch.front().mode == MatchMode::kVoiceToFace) {
    out.anchors = nets.speech->forward(store.Waveforms(anchors, rng).to(dtype));
    out.candidates = nets.face->forward(store.Frames(cands, rng, augment).to(dtype)).view({b, k, -1});
  } else {
    out.anchors = nets.face->forward(store.Frames(anchors, rng, augment).to(dtype));
    out.candidates = nets.speech->forward(store.Waveforms(cands, rng).to(dtype)).view({b, k, -1});
  }
  out.positives = torch::tensor(positives, torch::kInt64);
  return out;
}

torch::Tensor MatchingLoss(const std::vector<MatchingExample> &batch, MatchingNetworks &nets,
                           const MediaStore &store, Rng &rng, bool augment) {
  auto enc = EncodeExamples(batch, nets, store, rng, augment);
  return MatchingLossFromEmbeddings(enc.anchors, enc.candidates, enc.positives);
}

void to_json(json &j, const EpochLog &e) {
  j = json{{"epoch", e.epoch},
           {"lr", e.lr},
           {"train_loss", e.train_loss},
           {"val_loss", e.val_loss},
           {"val_acc", e.val_acc}};
}

PlateauSchedule::PlateauSchedule(const InferenceTrainConfig &config)
    : lr_(config.lr_init),
      factor_(config.decay_factor),
      patience_(config.patience_epochs),
      max_decays_(config.max_decays) {}

bool PlateauSchedule::Step(double val_loss) {
  if (stopped_) return true;
  if (val_loss < best_) {
    best_ = val_loss;
    bad_epochs_ = 0;
    return false;
  }
  if (++bad_epochs_ >= patience_) {
    bad_epochs_ = 0;
    lr_ /= factor_;
    if (++decays_ >= max_decays_) stopped_ = true;
  }
  return stopped_;
}

json PlateauSchedule::State() const {
  return json{{"lr", lr_},
              {"best", std::isfinite(best_) ? json(best_) : json(nullptr)},
              {"bad_epochs", bad_epochs_},
              {"decays", decays_},
              {"stopped", stopped_}};
}

void PlateauSchedule::Restore(const json &s) {
  lr_ = s.at("lr").get<double>();
  best_ = s.at("best").is_null() ? std::numeric_limits<double>::infinity()
                                 : s.at("best").get<double>();
  bad_epochs_ = s.at("bad_epochs").get<int>();
  decays_ = s.at("decays").get<int>();
  stopped_ = s.at("stopped").get<bool>();
}

std::pair<double, double> ValidateMatching(const std::vector<MatchingExample> &examples,
                                           MatchingNetworks &nets, const MediaStore &store,
                                           std::uint64_t seed) {
  Require(!examples.empty(), ErrorKind::kConfig, "no validation examples");
  torch::NoGradGuard no_grad;
  ModeGuard s(*nets.speech, false), f(*nets.face, false);
  Rng rng(seed);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 32;
  for (std::size_t i = 0; i < examples.size(); i += kChunk) {
    std::vector<MatchingExample> chunk(
        examples.begin() + static_cast<std::ptrdiff_t>(i),
        examples.begin() + static_cast<std::ptrdiff_t>(std::min(examples.size(), i + kChunk)));
    auto enc = EncodeExamples(chunk, nets, store, rng, false);
    auto logits = MatchLogits(enc.anchors, enc.candidates).to(torch::kFloat64);
    auto log_p = torch::log_softmax(logits, 1);
    loss_sum -= log_p.gather(1, enc.positives.view({-1, 1})).sum().item<double>();
    for (int64_t r = 0; r < logits.size(0); ++r) {
      auto row = logits[r].contiguous();
      std::span<const double> v(row.data_ptr<double>(), static_cast<std::size_t>(row.numel()));
      correct += ArgmaxLowestIndex(v) == chunk[static_cast<std::size_t>(r)].positive_index;
    }
  }
  const double n = static_cast<double>(examples.size());
  return {loss_sum / n, correct / n};
}

namespace {

constexpr const char *kTrainStateFile = "train_state.ckpt";

void SaveTrainState(const std::filesystem::path &path, MatchingNetworks &nets,
                    torch::optim::SGD &opt, const json &meta) {
  torch::serialize::OutputArchive archive, speech, face, optim;
  nets.speech->save(speech);
  nets.face->save(face);
  opt.save(optim);
  archive.write("format_version", c10::IValue(kCheckpointFormatVersion));
  archive.write("speech", speech);
  archive.write("face", face);
  archive.write("optimizer", optim);
  archive.write("meta", c10::IValue(meta.dump()));
  const auto tmp = path.string() + ".tmp";
  archive.save_to(tmp);
  std::filesystem::rename(tmp, path);
}

json LoadTrainState(const std::filesystem::path &path, MatchingNetworks &nets,
                    torch::optim::SGD &opt) {
  torch::serialize::InputArchive archive, speech, face, optim;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error &) {
    Fail(ErrorKind::kCheckpointMismatch, "cannot read training state " + path.string());
  }
  c10::IValue version, meta;
  if (!archive.try_read("format_version", version) || !version.isInt() ||
      version.toInt() != kCheckpointFormatVersion)
    Fail(ErrorKind::kCheckpointMismatch, path.string() + ": unsupported training state version");
  try {
    archive.read("speech", speech);
    archive.read("face", face);
    archive.read("optimizer", optim);
    nets.speech->load(speech);
    nets.face->load(face);
    opt.load(optim);
  } catch (const c10::Error &e) {
    Fail(ErrorKind::kCheckpointMismatch,
         path.string() + ": training state does not match the configured networks");
  }
  archive.read("meta", meta);
  return json::parse(meta.toStringRef());
}

}  // namespace

InferenceTrainResult TrainInference(const InferenceTrainConfig &config,
                                    MatchingNetworks &nets, const MediaStore &store,
                                    const ClipCatalog &catalog, const Split &split, Rng &rng,
                                    const InferenceTrainOptions &options) {
  Require(!split.train.empty(), ErrorKind::kConfig, "empty training split");
  Require(!split.val.empty() && !split.val_examples.empty(), ErrorKind::kConfig,
          "empty validation split");
  for (auto &p : nets.speech->parameters()) p.set_requires_grad(!config.freeze_speech_encoder);

  torch::optim::SGD opt(nets.Parameters(!config.freeze_speech_encoder),
                        torch::optim::SGDOptions(config.lr_init)
                            .momentum(config.momentum)
                            .weight_decay(config.weight_decay));
  PlateauSchedule schedule(config);
  InferenceTrainResult result;
  int start_epoch = 1;
  std::uint64_t val_seed = rng.NextU64();

  const auto state_path = options.output_dir.empty()
                              ? std::filesystem::path()
                              : options.output_dir / kTrainStateFile;
  if (options.resume) {
    Require(!state_path.empty() && std::filesystem::exists(state_path),
            ErrorKind::kCheckpointMismatch, "nothing to resume: no " + std::string(kTrainStateFile));
    json meta = LoadTrainState(state_path, nets, opt);
    schedule.Restore(meta.at("schedule"));
    rng.LoadState(meta.at("rng").get<std::string>());
    start_epoch = meta.at("epoch").get<int>() + 1;
    val_seed = meta.at("val_seed").get<std::uint64_t>();
    for (const auto &e : meta.at("log"))
      result.log.push_back({e.at("epoch"), e.at("lr"), e.at("train_loss"), e.at("val_loss"),
                            e.at("val_acc")});
  }

  const std::size_t steps =
      config.steps_per_epoch > 0
          ? static_cast<std::size_t>(config.steps_per_epoch)
          : (split.train.size() + config.batch_size - 1) / config.batch_size;

  for (int epoch = start_epoch; epoch <= config.max_epochs && !schedule.stopped(); ++epoch) {
    for (auto &group : opt.param_groups())
      static_cast<torch::optim::SGDOptions &>(group.options()).lr(schedule.lr());
    nets.Train(true);
    if (config.freeze_speech_encoder) nets.speech->eval();
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      auto batch = SampleKWayBatch(catalog, split.train, config.k, config.mode,
                                   static_cast<std::size_t>(config.batch_size), rng);
      opt.zero_grad();
      auto loss = MatchingLoss(batch, nets, store, rng, /*augment=*/true);
      loss.backward();
      opt.step();
      loss_sum += loss.item<double>();
    }
    auto [val_loss, val_acc] = ValidateMatching(split.val_examples, nets, store, val_seed);
    EpochLog entry{epoch, schedule.lr(), loss_sum / steps, val_loss, val_acc};
    result.log.push_back(entry);
    result.epochs_run = epoch;
    result.stopped_by_schedule = schedule.Step(val_loss);
    if (options.on_epoch) options.on_epoch(entry);
    if (!state_path.empty()) {
      json log = json::array();
      for (const auto &e : result.log) log.push_back(e);
      SaveTrainState(state_path, nets, opt,
                     json{{"epoch", epoch},
                          {"schedule", schedule.State()},
                          {"rng", rng.SaveState()},
                          {"val_seed", val_seed},
                          {"log", log}});
    }
  }
  nets.Train(false);
  return result;
}

EmbeddingTables BuildEmbeddingTables(MatchingNetworks &nets, const MediaStore &store,
                                     const std::vector<std::size_t> &clips, Rng &rng) {
  EmbeddingTables t;
  t.speech.resize(store.size());
  t.face.resize(store.size());
  const auto dtype = nets.face->parameters().front().scalar_type();
  for (std::size_t clip : clips) {
    std::vector<MediaRef> refs;
    for (std::size_t f = 0; f < store.NumFrames(clip); ++f) refs.push_back({clip, f});
    t.speech[clip] = EncodeSpeechBatch(nets.speech, store.Waveforms(refs, rng).to(dtype));
    t.face[clip] = EncodeFaceBatch(nets.face, store.Frames(refs, rng, false).to(dtype));
  }
  return t;
}

void to_json(json &j, const MatchingReport &r) {
  j = json{{"mode", r.mode},
           {"K", r.k},
           {"n_repeats", r.n_repeats},
           {"mean_acc", r.mean_acc},
           {"std_acc", r.std_acc},
           {"accuracies", r.accuracies},
           {"trials_per_repeat", r.trials_per_repeat}};
}

MatchingReport EvaluateMatching(const EmbeddingTables &tables, const ClipCatalog &catalog,
                                const std::vector<std::size_t> &pool, int k, MatchMode mode,
                                int n_repeats, Rng &rng, int anchors_per_clip) {
  Require(n_repeats >= 1, ErrorKind::kInvalidInput, "n_repeats must be >= 1");
  Require(pool.size() >= static_cast<std::size_t>(k), ErrorKind::kInsufficientData,
          "K=" + std::to_string(k) + " needs at least K clips, have " +
              std::to_string(pool.size()));
  MatchingReport report;
  report.mode = mode;
  report.k = k;
  report.n_repeats = n_repeats;
  const bool vf = mode == MatchMode::kVoiceToFace;
  std::vector<double> logits(static_cast<std::size_t>(k));
  for (int rep = 0; rep < n_repeats; ++rep) {
    std::size_t correct = 0, trials = 0;
    for (std::size_t anchor : pool) {
      for (int a = 0; a < anchors_per_clip; ++a) {
        auto ex = SampleKWayExample(catalog, pool, anchor, k, mode, rng);
        const auto &anchor_table = vf ? tables.speech : tables.face;
        const auto &cand_table = vf ? tables.face : tables.speech;
        auto av = anchor_table[ex.anchor.clip][static_cast<int64_t>(ex.anchor.frame)];
        for (std::size_t j = 0; j < ex.candidates.size(); ++j) {
          const auto &c = ex.candidates[j];
          logits[j] = torch::dot(av, cand_table[c.clip][static_cast<int64_t>(c.frame)])
                          .item<double>();
        }
        correct += ArgmaxLowestIndex(logits) == ex.positive_index;
        ++trials;
      }
    }
    report.trials_per_repeat = trials;
    report.accuracies.push_back(static_cast<double>(correct) / trials);
  }
  double mean = 0.0;
  for (double a : report.accuracies) mean += a;
  mean /= n_repeats;
  double var = 0.0;
  for (double a : report.accuracies) var += (a - mean) * (a - mean);
  report.mean_acc = mean;
  report.std_acc = n_repeats > 1 ? std::sqrt(var / (n_repeats - 1)) : 0.0;
  return report;
}

MatchingReport EvaluateMatching(MatchingNetworks &nets, const MediaStore &store,
                                const ClipCatalog &catalog, const std::vector<std::size_t> &pool,
                                int k, MatchMode mode, int n_repeats, Rng &rng,
                                int anchors_per_clip) {
  Require(pool.size() >= static_cast<std::size_t>(k), ErrorKind::kInsufficientData,
          "K=" + std::to_string(k) + " needs at least K clips, have " +
              std::to_string(pool.size()));
  auto tables = BuildEmbeddingTables(nets, store, pool, rng);
  return EvaluateMatching(tables, catalog, pool, k, mode, n_repeats, rng, anchors_per_clip);
}

}  // namespace v2f
