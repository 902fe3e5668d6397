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

#ifndef V2F_MATCHING_HPP_
#define V2F_MATCHING_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "v2f/dataset.hpp"
#include "v2f/encoders.hpp"

namespace v2f {

// K-way matching outcome for one anchor.
struct MatchResult {
  std::vector<double> probabilities;
  std::size_t predicted_index = 0;
  std::size_t positive_index = 0;
  MatchMode mode = MatchMode::kVoiceToFace;
};

// Softmax over raw inner products <anchor, candidate_j>, evaluated in double
// with max subtraction. argmax ties go to the lowest index.
MatchResult MatchProbabilities(const Embedding &anchor,
                               std::span<const Embedding> candidates,
                               MatchMode mode = MatchMode::kVoiceToFace,
                               std::size_t positive_index = 0);

std::size_t ArgmaxLowestIndex(std::span<const double> values);

// anchors [B, D], candidates [B, K, D] -> logits [B, K].
torch::Tensor MatchLogits(const torch::Tensor &anchors, const torch::Tensor &candidates);

// Mean over the batch of -log p(positive), via log-softmax.
torch::Tensor MatchingLossFromEmbeddings(const torch::Tensor &anchors,
                                         const torch::Tensor &candidates,
                                         const torch::Tensor &positive_index);

// Speech and face encoders trained jointly on K-way matching.
struct MatchingNetworks {
  SpeechEncoder speech{nullptr};
  FaceEncoder face{nullptr};

  static MatchingNetworks Create(const SpeechEncoderConfig &speech,
                                 const FaceEncoderConfig &face);
  void Train(bool on);
  std::vector<torch::Tensor> Parameters(bool include_speech = true) const;
};

struct EncodedBatch {
  torch::Tensor anchors;     // [B, D]
  torch::Tensor candidates;  // [B, K, D]
  torch::Tensor positives;   // [B], int64
};

// Materializes media for the examples and runs both encoders in whatever
// mode they are in. Frames are flipped at random when augment is set.
EncodedBatch EncodeExamples(const std::vector<MatchingExample> &batch,
                            MatchingNetworks &nets, const MediaStore &store,
                            Rng &rng, bool augment);

torch::Tensor MatchingLoss(const std::vector<MatchingExample> &batch,
                           MatchingNetworks &nets, const MediaStore &store, Rng &rng,
                           bool augment = false);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};
void to_json(nlohmann::json &j, const EpochLog &e);

// Learning-rate plateau schedule: divide by decay_factor when the
// validation loss has not decreased for patience_epochs; stop at the
// max_decays-th decay.
class PlateauSchedule {
 public:
  explicit PlateauSchedule(const InferenceTrainConfig &config);

  // Records one epoch's validation loss; returns true when training must
  // stop.
  bool Step(double val_loss);
  double lr() const { return lr_; }
  int decays() const { return decays_; }
  bool stopped() const { return stopped_; }

  nlohmann::json State() const;
  void Restore(const nlohmann::json &state);

 private:
  double lr_, factor_;
  int patience_, max_decays_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
  int decays_ = 0;
  bool stopped_ = false;
};

struct InferenceTrainResult {
  std::vector<EpochLog> log;
  int epochs_run = 0;
  bool stopped_by_schedule = false;
};

struct InferenceTrainOptions {
  // Directory for train_state.ckpt (rewritten every epoch); empty disables
  // checkpointing.
  std::filesystem::path output_dir;
  bool resume = false;
  std::function<void(const EpochLog &)> on_epoch;
};

// SGD with momentum and weight decay under the plateau schedule.
InferenceTrainResult TrainInference(const InferenceTrainConfig &config,
                                    MatchingNetworks &nets, const MediaStore &store,
                                    const ClipCatalog &catalog, const Split &split,
                                    Rng &rng, const InferenceTrainOptions &options = {});

// Mean loss and top-1 accuracy over fixed examples, eval mode.
std::pair<double, double> ValidateMatching(const std::vector<MatchingExample> &examples,
                                           MatchingNetworks &nets,
                                           const MediaStore &store, std::uint64_t seed);

// Embedding tables for every (clip, time frame) of a store: one cropped
// speech window and one un-flipped frame each.
struct EmbeddingTables {
  std::vector<torch::Tensor> speech;  // per clip [n_frames, D]
  std::vector<torch::Tensor> face;    // per clip [n_frames, D]
};
EmbeddingTables BuildEmbeddingTables(MatchingNetworks &nets, const MediaStore &store,
                                     const std::vector<std::size_t> &clips, Rng &rng);

struct MatchingReport {
  MatchMode mode = MatchMode::kVoiceToFace;
  int k = 2;
  int n_repeats = 5;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  std::vector<double> accuracies;
  std::size_t trials_per_repeat = 0;
};
void to_json(nlohmann::json &j, const MatchingReport &r);

// Top-1 accuracy averaged over n_repeats independent negative draws; every
// clip of pool is an anchor anchors_per_clip times per repeat. std is the
// sample standard deviation over repeats.
MatchingReport EvaluateMatching(const EmbeddingTables &tables, const ClipCatalog &catalog,
                                const std::vector<std::size_t> &pool, int k,
                                MatchMode mode, int n_repeats, Rng &rng,
                                int anchors_per_clip = 1);

MatchingReport EvaluateMatching(MatchingNetworks &nets, const MediaStore &store,
                                const ClipCatalog &catalog,
                                const std::vector<std::size_t> &pool, int k,
                                MatchMode mode, int n_repeats, Rng &rng,
                                int anchors_per_clip = 1);

}  // namespace v2f

#endif  // V2F_MATCHING_HPP_
