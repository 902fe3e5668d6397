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

#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include <torch/torch.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "v2f/audio.hpp"
#include "v2f/checkpoint.hpp"
#include "v2f/dataset.hpp"
#include "v2f/encoders.hpp"
#include "v2f/error.hpp"
#include "v2f/evaluation.hpp"
#include "v2f/gan.hpp"
#include "v2f/image.hpp"
#include "v2f/matching.hpp"
#include "v2f/rng.hpp"
#include "v2f/toy_data.hpp"

namespace v2f::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Options shared by every subcommand.
struct Common {
  std::string preset;
  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  bool force = false;
  std::vector<std::pair<std::string, json>> flags;

  void Attach(CLI::App *app) {
    app->add_option("--preset", preset, "Configuration preset: paper, toy or tiny");
    app->add_option("--config", config, "JSON configuration file");
    app->add_option("-o,--output-dir", output_dir, "Run directory (default runs/<timestamp>)");
    app->add_option("--seed", seed, "Seed for every random draw");
    app->add_option("--set", sets, "Override a configuration key, e.g. gan.r1_gamma=5");
    app->add_flag("--force", force, "Allow writing into a non-empty output directory");
  }

  RunConfig Resolve(CLI::App *app) const {
    ConfigSources s;
    if (!config.empty()) s.config_file = config;
    s.env = EnvironmentOverrides();
    s.flags = flags;
    for (const auto &kv : sets) {
      const auto eq = kv.find('=');
      Require(eq != std::string::npos && eq > 0, ErrorKind::kConfig,
              "--set expects key=value, got '" + kv + "'");
      json v;
      try {
        v = json::parse(kv.substr(eq + 1));
      } catch (const json::exception &) {
        v = kv.substr(eq + 1);
      }
      s.flags.emplace_back(kv.substr(0, eq), v);
    }
    if (!preset.empty()) s.preset = preset;
    if (app->count("--seed")) s.seed = seed;
    if (!output_dir.empty()) s.output_dir = output_dir;
    return ResolveConfig(s);
  }
};

template <typename T>
void FlagIf(CLI::App *app, const std::string &name, Common &c, const std::string &key,
            const T &value) {
  if (app->count(name)) c.flags.emplace_back(key, json(value));
}

void WriteJson(const fs::path &path, const json &j) {
  std::ofstream out(path);
  Require(static_cast<bool>(out), ErrorKind::kData, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json ReadJson(const fs::path &path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kData, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kData, path.string() + ": " + e.what());
  }
}

// Creates the run directory; refuses a non-empty one unless allowed.
void PrepareOutputDir(const fs::path &dir, bool allow_existing) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !allow_existing)
    Fail(ErrorKind::kConfig,
         "output directory " + dir.string() + " is not empty (use --force to reuse it)");
  fs::create_directories(dir);
}

void Begin(const RunConfig &rc, bool allow_existing) {
  PrepareOutputDir(rc.output_dir, allow_existing);
  WriteJson(rc.output_dir / "config.json", rc.ToJson());
  torch::manual_seed(rc.seed);
}

struct Data {
  Manifest manifest;
  ClipCatalog catalog;
  std::unique_ptr<MediaStore> store;
};

Data LoadData(const std::string &manifest_path, const RunConfig &rc) {
  Require(!manifest_path.empty(), ErrorKind::kConfig, "--manifest is required");
  Require(fs::exists(manifest_path), ErrorKind::kConfig,
          "manifest not found: " + manifest_path);
  Data d;
  d.manifest = LoadManifest(manifest_path);
  d.catalog = ClipCatalog::FromManifest(d.manifest, rc.preset.data.frames_per_clip);
  d.store = std::make_unique<MediaStore>(MediaStore::Load(
      d.manifest, rc.preset.audio, rc.preset.image, rc.preset.data.frames_per_clip));
  return d;
}

MatchingNetworks LoadMatchingNetworks(const fs::path &dir, const Preset &p) {
  Require(!dir.empty(), ErrorKind::kConfig, "--inference-dir is required");
  auto nets = MatchingNetworks::Create(p.speech, p.face);
  LoadCheckpoint(dir / "speech_encoder.ckpt", "speech_encoder", p.speech, *nets.speech);
  LoadCheckpoint(dir / "face_encoder.ckpt", "face_encoder", p.face, *nets.face);
  nets.Train(false);
  return nets;
}

Split LoadRunSplit(const fs::path &dir, const ClipCatalog &catalog) {
  const auto path = dir / "split.json";
  Require(fs::exists(path), ErrorKind::kConfig, "no split.json in " + dir.string());
  return LoadSplit(path, catalog);
}

GenerationModel LoadGenerationModel(const fs::path &dir, const Preset &p) {
  Require(!dir.empty(), ErrorKind::kConfig, "--gan-dir is required");
  auto nets = LoadGanNetworks(dir, p);
  return {nets.generator, nets.speech};
}

std::optional<double> Truncation(double t) {
  if (t <= 0.0) return std::nullopt;
  return t;
}

// ---------------------------------------------------------------------------

int SynthData(const RunConfig &rc, bool force, int identities, int clips) {
  Begin(rc, force);
  ToySpec spec;
  spec.n_identities = identities;
  spec.clips_per_identity = clips;
  spec.frames_per_clip = rc.preset.data.toy_frames;
  spec.image_size = rc.preset.data.toy_image_size;
  spec.clip_seconds = rc.preset.data.toy_clip_seconds;
  spec.sample_rate = rc.preset.audio.sample_rate;
  spec.seed = rc.seed;
  const auto data = SynthesizeToyDataset(spec);
  const auto manifest = WriteToyDataset(data, rc.output_dir);
  WriteJson(rc.output_dir / "synth.json",
            {{"n_identities", identities},
             {"clips_per_identity", clips},
             {"n_clips", manifest.clips.size()},
             {"frames_per_clip", spec.frames_per_clip},
             {"image_size", spec.image_size},
             {"clip_seconds", spec.clip_seconds},
             {"seed", rc.seed}});
  std::cout << "wrote " << manifest.clips.size() << " clips to "
            << (rc.output_dir / "manifest.jsonl").string() << '\n';
  return 0;
}

int ImportCsvCmd(const RunConfig &rc, bool force, const std::string &csv) {
  Require(!csv.empty(), ErrorKind::kConfig, "--csv is required");
  Require(fs::exists(csv), ErrorKind::kConfig, "CSV not found: " + csv);
  Begin(rc, force);
  const auto clips = ImportCsv(csv);
  SaveManifest(rc.output_dir / "manifest.jsonl", clips);
  std::cout << "imported " << clips.size() << " clips; media paths stay relative to "
            << fs::absolute(fs::path(csv)).parent_path().string() << '\n';
  return 0;
}

json MatchingSummary(MatchingNetworks &nets, const Data &d, const std::vector<std::size_t> &pool,
                     MatchMode mode, int n_repeats, Rng &rng) {
  json out = json::object();
  auto tables = BuildEmbeddingTables(nets, *d.store, pool, rng);
  for (int k : {2, 10}) {
    if (pool.size() < static_cast<std::size_t>(k)) continue;
    auto rep = EvaluateMatching(tables, d.catalog, pool, k, mode, n_repeats, rng, 4);
    out[std::to_string(k) + "way"] = rep;
  }
  return out;
}

int TrainInferenceCmd(const RunConfig &rc, bool force, const std::string &manifest, bool resume) {
  Begin(rc, force || resume);
  auto d = LoadData(manifest, rc);
  Rng rng(rc.seed);
  Split split;
  const auto split_path = rc.output_dir / "split.json";
  if (resume) {
    Require(fs::exists(split_path), ErrorKind::kCheckpointMismatch,
            "nothing to resume in " + rc.output_dir.string());
    split = LoadSplit(split_path, d.catalog);
  } else {
    split = MakeSplit(d.catalog, rc.preset.data, rc.preset.inference, rng);
    SaveSplit(split_path, d.catalog, split);
  }
  auto nets = MatchingNetworks::Create(rc.preset.speech, rc.preset.face);
  InferenceTrainOptions opt;
  opt.output_dir = rc.output_dir;
  opt.resume = resume;
  opt.on_epoch = [](const EpochLog &e) {
    std::cout << "epoch " << e.epoch << " lr " << e.lr << " train_loss " << e.train_loss
              << " val_loss " << e.val_loss << " val_acc " << e.val_acc << std::endl;
  };
  auto result = TrainInference(rc.preset.inference, nets, *d.store, d.catalog, split, rng, opt);
  {
    std::ofstream log(rc.output_dir / "log.jsonl");
    for (const auto &e : result.log) log << json(e).dump() << '\n';
  }
  SaveCheckpoint(rc.output_dir / "speech_encoder.ckpt", "speech_encoder", rc.preset.speech,
                 *nets.speech);
  SaveCheckpoint(rc.output_dir / "face_encoder.ckpt", "face_encoder", rc.preset.face,
                 *nets.face);
  Rng eval_rng(rc.seed + 1);
  json summary{{"epochs_run", result.epochs_run},
               {"stopped_by_schedule", result.stopped_by_schedule},
               {"final", result.log.empty() ? json(nullptr) : json(result.log.back())},
               {"val_matching", MatchingSummary(nets, d, split.val, rc.preset.inference.mode,
                                                rc.preset.eval.n_repeats, eval_rng)}};
  WriteJson(rc.output_dir / "summary.json", summary);
  std::cout << summary["val_matching"].dump() << '\n';
  return 0;
}

int TrainGanCmd(const RunConfig &rc, bool force, const std::string &manifest,
                const std::string &inference_dir) {
  Begin(rc, force);
  auto d = LoadData(manifest, rc);
  Rng rng(rc.seed);
  std::optional<MatchingNetworks> pretrained;
  Split split;
  if (!inference_dir.empty()) {
    split = LoadRunSplit(inference_dir, d.catalog);
    if (!rc.preset.gan.skip_transfer) pretrained = LoadMatchingNetworks(inference_dir, rc.preset);
  } else {
    Require(rc.preset.gan.skip_transfer, ErrorKind::kConfig,
            "train-gan needs --inference-dir with encoder checkpoints unless --skip-transfer");
    split = MakeSplit(d.catalog, rc.preset.data, rc.preset.inference, rng);
  }
  SaveSplit(rc.output_dir / "split.json", d.catalog, split);
  auto nets = MakeGanNetworks(rc.preset, pretrained ? &*pretrained : nullptr);
  GanTrainOptions opt;
  opt.output_dir = rc.output_dir;
  opt.on_log = [](const GanLogEntry &e) {
    std::cout << "iter " << e.iter << " L_D " << e.loss_d << " L_G " << e.loss_g << " r1 "
              << e.r1 << std::endl;
  };
  auto result = TrainGan(rc.preset.gan, nets, *d.store, d.catalog, split.train, rng, opt);
  SaveGanNetworks(rc.output_dir, rc.preset, nets,
                  {{"use_mismatched_identity_loss", rc.preset.gan.use_mismatched_identity_loss},
                   {"skip_transfer", rc.preset.gan.skip_transfer}});
  WriteJson(rc.output_dir / "summary.json",
            {{"iters_run", result.iters_run},
             {"final", result.log.empty() ? json(nullptr) : json(result.log.back())}});
  return 0;
}

int GenerateCmd(const RunConfig &rc, bool force, const std::string &gan_dir,
                const std::string &speech, int n, double truncation) {
  Require(!speech.empty(), ErrorKind::kConfig, "--speech is required");
  Require(n >= 1, ErrorKind::kConfig, "--n must be positive");
  Begin(rc, force);
  auto model = LoadGenerationModel(gan_dir, rc.preset);
  Rng rng(rc.seed);
  const auto raw = ReadWav(speech);
  const auto wave = PreprocessAudio(raw.samples, raw.sample_rate, rc.preset.audio, rng);
  const auto c = SpeechEncode(model.condition, wave).values;
  const auto z = SampleLatent(n, model.generator->config().z_dim, rng, Truncation(truncation));
  const auto images = Generate(model.generator, z, c.unsqueeze(0).expand({n, c.size(0)}));
  const auto cd = c.to(torch::kFloat64).contiguous();
  json files = json::array();
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "face_%03d.png", i);
    WritePng(rc.output_dir / name, images[i]);
    files.push_back(name);
  }
  WriteJson(rc.output_dir / "generate.json",
            {{"n", n},
             {"truncation", truncation > 0 ? json(truncation) : json(nullptr)},
             {"files", files},
             {"condition", std::vector<double>(cd.data_ptr<double>(),
                                               cd.data_ptr<double>() + cd.numel())}});
  std::cout << "wrote " << n << " images to " << rc.output_dir.string() << '\n';
  return 0;
}

std::vector<std::size_t> EvalPool(const Data &d, const std::string &inference_dir,
                                  const std::string &which) {
  if (inference_dir.empty() || !fs::exists(fs::path(inference_dir) / "split.json")) {
    std::vector<std::size_t> all(d.catalog.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  auto split = LoadRunSplit(inference_dir, d.catalog);
  if (which == "train") return split.train;
  if (which == "val") return split.val;
  if (which == "test") return split.test;
  Fail(ErrorKind::kConfig, "--split must be train, val or test");
}

int InterpolateCmd(const RunConfig &rc, bool force, const std::string &gan_dir,
                   const std::string &manifest, const std::string &inference_dir,
                   const std::string &which, int steps, int rows, double truncation) {
  Require(which == "condition" || which == "latent", ErrorKind::kConfig,
          "--which must be condition or latent");
  Begin(rc, force);
  auto model = LoadGenerationModel(gan_dir, rc.preset);
  auto d = LoadData(manifest, rc);
  const auto pool = EvalPool(d, inference_dir, "test");
  std::optional<MatchingNetworks> judge;
  if (!inference_dir.empty()) judge = LoadMatchingNetworks(inference_dir, rc.preset);
  Rng rng(rc.seed);
  const auto target =
      which == "condition" ? InterpolationTarget::kCondition : InterpolationTarget::kLatent;
  std::vector<torch::Tensor> grid;
  json pairs = json::array();
  double mid_a = 0, mid_b = 0, ends = 0;
  std::size_t smooth = 0;
  for (int r = 0; r < rows; ++r) {
    const auto a = pool[rng.Index(pool.size())];
    std::size_t b = a;
    for (int tries = 0; tries < 1000 && d.catalog.identities[b] == d.catalog.identities[a];
         ++tries)
      b = pool[rng.Index(pool.size())];
    auto c = EncodeConditions(model.condition, *d.store, {{a, 0}, {b, 0}}, rng);
    auto z = SampleLatent(2, model.generator->config().z_dim, rng, Truncation(truncation));
    auto images = target == InterpolationTarget::kCondition
                      ? InterpolateGrid(model.generator, c[0], c[1], target, z[0], steps)
                      : InterpolateGrid(model.generator, z[0], z[1], target, c[0], steps);
    grid.push_back(images);
    pairs.push_back({d.catalog.clip_ids[a], d.catalog.clip_ids[b]});
    if (judge) {
      auto fe = EncodeFaceBatch(judge->face, images);
      const double ma = CosineDistance(fe[steps / 2], fe[0]);
      const double mb = CosineDistance(fe[steps / 2], fe[steps - 1]);
      const double ab = CosineDistance(fe[0], fe[steps - 1]);
      mid_a += ma;
      mid_b += mb;
      ends += ab;
      smooth += ma <= ab && mb <= ab;
    }
  }
  WritePng(rc.output_dir / "grid.png", Mosaic(torch::cat(grid), steps, 1));
  json report{{"which", which}, {"steps", steps}, {"rows", rows}, {"pairs", pairs}};
  if (judge)
    report["midpoint"] = {{"mean_cd_mid_to_start", mid_a / rows},
                          {"mean_cd_mid_to_end", mid_b / rows},
                          {"mean_cd_start_to_end", ends / rows},
                          {"fraction_within_endpoint_distance",
                           static_cast<double>(smooth) / rows}};
  WriteJson(rc.output_dir / "interpolate.json", report);
  return 0;
}

struct EvalArgs {
  std::string gan_dir, other_gan_dir, inference_dir, manifest, gallery, metric = "all",
                                                                         split = "test";
  int pairs = 0, draws = 0, repeats = 0, k = 0, images_per_speaker = 0;
  std::string mode;
};

json Reference(const std::string &key) {
  try {
    auto ref = LoadReferenceResults();
    return ref.contains(key) ? ref[key] : json(nullptr);
  } catch (const Error &) {
    return nullptr;
  }
}

int EvaluateCmd(const RunConfig &rc, bool force, const std::string &experiment,
                const EvalArgs &a) {
  Begin(rc, force);
  Rng rng(rc.seed);
  const auto &ev = rc.preset.eval;
  json report{{"experiment", experiment}, {"seed", rc.seed}};
  const int draws = a.draws > 0 ? a.draws : ev.qta2_draws_per_clip;

  if (experiment == "qta3") {
    auto model = LoadGenerationModel(a.gan_dir, rc.preset);
    auto judge = LoadMatchingNetworks(a.inference_dir, rc.preset);
    std::vector<DistanceMetric> metrics;
    if (a.metric == "all") {
      metrics = {DistanceMetric::kL1, DistanceMetric::kL2, DistanceMetric::kCosine};
    } else {
      metrics = {ParseDistanceMetric(a.metric)};
    }
    Data d = LoadData(a.gallery.empty() ? a.manifest : a.gallery, rc);
    const auto pool = a.gallery.empty() ? EvalPool(d, a.inference_dir, a.split)
                                        : EvalPool(d, "", "test");
    const int per_speaker =
        a.images_per_speaker > 0 ? a.images_per_speaker : ev.gallery_images_per_speaker;
    auto reports = Qta3Retrieval(model, judge.face, *d.store, d.catalog, pool, pool,
                                 per_speaker, draws, metrics, Truncation(ev.truncation), rng);
    report["result"] = reports;
    report["reference"] = Reference("qta3");
  } else if (experiment == "matching") {
    auto judge = LoadMatchingNetworks(a.inference_dir, rc.preset);
    Data d = LoadData(a.manifest, rc);
    const auto pool = EvalPool(d, a.inference_dir, a.split);
    const int k = a.k > 0 ? a.k : rc.preset.inference.k;
    const auto mode = a.mode.empty() ? rc.preset.inference.mode : ParseMatchMode(a.mode);
    report["result"] = EvaluateMatching(judge, *d.store, d.catalog, pool, k, mode,
                                        a.repeats > 0 ? a.repeats : ev.n_repeats, rng,
                                        draws);
    report["reference"] = Reference("matching_accuracy");
  } else {
    auto model = LoadGenerationModel(a.gan_dir, rc.preset);
    auto judge = LoadMatchingNetworks(a.inference_dir, rc.preset);
    Data d = LoadData(a.manifest, rc);
    const auto pool = EvalPool(d, a.inference_dir, a.split);
    const std::size_t pairs = a.pairs > 0 ? static_cast<std::size_t>(a.pairs)
                                          : static_cast<std::size_t>(ev.qta1_pairs);
    if (experiment == "qta1" || experiment == "qta1-control") {
      std::vector<MediaRef> refs;
      for (auto c : pool) refs.push_back({c, rng.Index(d.catalog.n_frames[c])});
      auto conditions = EncodeConditions(model.condition, *d.store, refs, rng);
      if (experiment == "qta1") {
        auto r = Qta1Correlation(model.generator, judge.face, conditions, pairs, rng);
        report["result"] = r;
        if (r.pearson.r)
          WriteScatterPng(rc.output_dir / "qta1_scatter.png", r.cd_condition, r.cd_face);
      } else {
        const auto attr_path = d.manifest.root / "attributes.json";
        Require(fs::exists(attr_path), ErrorKind::kData,
                "qta1-control needs attribute labels in " + attr_path.string());
        std::map<std::string, int> attr;
        for (const auto &[id, v] : LoadAttributes(attr_path)) attr[id] = v;
        std::vector<int> labels;
        for (auto c : pool) {
          Require(attr.count(d.catalog.identities[c]) > 0, ErrorKind::kData,
                  "no attribute label for identity " + d.catalog.identities[c]);
          labels.push_back(attr[d.catalog.identities[c]]);
        }
        report["result"] =
            Qta1AttributeControl(model.generator, judge.face, conditions, labels, pairs, rng);
      }
      report["reference"] = Reference("qta1");
    } else if (experiment == "qta2-vf") {
      std::optional<GenerationModel> other;
      if (!a.other_gan_dir.empty()) other = LoadGenerationModel(a.other_gan_dir, rc.preset);
      report["comparator"] = other ? "vs_other_generator" : "vs_ground_truth";
      report["result"] = Qta2VfPreference(model, other ? &*other : nullptr, judge, *d.store,
                                          d.catalog, pool, draws, rng);
      report["reference"] = Reference("qta2_vf");
    } else if (experiment == "qta2-fv") {
      report["result"] = Qta2FvAccuracy(model, judge, *d.store, d.catalog, pool, draws, rng);
      report["reference"] = Reference("qta2_fv");
    } else {
      Fail(ErrorKind::kConfig, "unknown experiment '" + experiment +
                                   "' (qta1, qta1-control, qta2-vf, qta2-fv, qta3, matching)");
    }
  }
  const auto out = rc.output_dir / (experiment + ".json");
  WriteJson(out, report);
  std::cout << report["result"].dump() << '\n';
  return 0;
}

}  // namespace

int Main(int argc, char **argv) {
  torch::set_num_threads(1);
  CLI::App app{"v2f: speech-conditioned face generation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "v2f 0.1.0");

  Common common;
  int identities = 20, clips = 5;
  std::string csv, manifest, inference_dir, gan_dir, speech, which = "condition", experiment;
  std::string mode, gallery;
  int k = 0, batch = 0, epochs = 0, iters = 0, n = 1, steps = 8, rows = 4;
  double lr = 0.0, truncation = 1.0, r1_gamma = 0.0;
  bool resume = false, no_mil = false, skip_transfer = false, freeze_speech = false;
  EvalArgs eval;

  auto *synth = app.add_subcommand("synth-data", "Synthesize the toy paired dataset");
  synth->add_option("--identities", identities, "Number of identities")->check(CLI::Range(1, 100000));
  synth->add_option("--clips", clips, "Clips per identity")->check(CLI::Range(1, 100000));

  auto *import = app.add_subcommand("import-csv", "Convert a CSV clip list into a manifest");
  import->add_option("--csv", csv, "CSV with clip_id,audio_path,frame_paths,identity_id");

  auto *ti = app.add_subcommand("train-inference", "Train the matching encoders");
  ti->add_option("--manifest", manifest, "Dataset manifest (JSON lines)");
  ti->add_option("--mode", mode, "vf or fv");
  ti->add_option("--k", k, "Candidates per example");
  ti->add_option("--batch-size", batch, "Examples per step");
  ti->add_option("--epochs", epochs, "Maximum epochs");
  ti->add_option("--lr", lr, "Initial learning rate");
  ti->add_flag("--freeze-speech-encoder", freeze_speech, "Keep the speech encoder fixed");
  ti->add_flag("--resume", resume, "Continue from train_state.ckpt in the output directory");

  auto *tg = app.add_subcommand("train-gan", "Train the conditional generator");
  tg->add_option("--manifest", manifest, "Dataset manifest (JSON lines)");
  tg->add_option("--inference-dir", inference_dir, "train-inference run directory");
  tg->add_option("--iters", iters, "Generator iterations");
  tg->add_option("--batch-size", batch, "Batch size");
  tg->add_option("--r1-gamma", r1_gamma, "R1 coefficient");
  tg->add_flag("--no-mismatched-identity-loss", no_mil,
               "Drop the mismatched identity terms (plain relativistic loss)");
  tg->add_flag("--skip-transfer", skip_transfer, "Start both encoders from random init");

  auto *gen = app.add_subcommand("generate", "Generate faces from a speech file");
  gen->add_option("--gan-dir", gan_dir, "train-gan run directory");
  gen->add_option("--speech", speech, "WAV file");
  gen->add_option("--n", n, "Number of images");
  gen->add_option("--truncation", truncation, "Latent truncation threshold (0 disables)");

  auto *interp = app.add_subcommand("interpolate", "Interpolation grids");
  interp->add_option("--gan-dir", gan_dir, "train-gan run directory");
  interp->add_option("--manifest", manifest, "Dataset manifest (JSON lines)");
  interp->add_option("--inference-dir", inference_dir, "Split and face encoder for statistics");
  interp->add_option("--which", which, "condition or latent");
  interp->add_option("--steps", steps, "Images per row")->check(CLI::Range(2, 1000));
  interp->add_option("--rows", rows, "Rows")->check(CLI::Range(1, 1000));
  interp->add_option("--truncation", truncation, "Latent truncation threshold (0 disables)");

  auto *evalc = app.add_subcommand("evaluate", "Quantitative evaluations");
  evalc->add_option("experiment", experiment,
                    "qta1, qta1-control, qta2-vf, qta2-fv, qta3 or matching")
      ->required();
  evalc->add_option("--gan-dir", eval.gan_dir, "train-gan run directory");
  evalc->add_option("--other-gan-dir", eval.other_gan_dir, "Second generator for qta2-vf");
  evalc->add_option("--inference-dir", eval.inference_dir, "train-inference run directory");
  evalc->add_option("--manifest", eval.manifest, "Dataset manifest (JSON lines)");
  evalc->add_option("--gallery", eval.gallery, "Gallery manifest for qta3");
  evalc->add_option("--metric", eval.metric, "l1, l2, cd or all");
  evalc->add_option("--split", eval.split, "train, val or test");
  evalc->add_option("--pairs", eval.pairs, "QTA 1 pairs");
  evalc->add_option("--draws", eval.draws, "Draws per clip");
  evalc->add_option("--repeats", eval.repeats, "Repeats for matching");
  evalc->add_option("--k", eval.k, "K for matching");
  evalc->add_option("--mode", eval.mode, "vf or fv for matching");
  evalc->add_option("--images-per-speaker", eval.images_per_speaker, "Gallery images per speaker");

  for (auto *sub : {synth, import, ti, tg, gen, interp, evalc}) common.Attach(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ti->parsed()) {
      FlagIf(ti, "--mode", common, "inference.mode", mode);
      FlagIf(ti, "--k", common, "inference.k", k);
      FlagIf(ti, "--batch-size", common, "inference.batch_size", batch);
      FlagIf(ti, "--epochs", common, "inference.max_epochs", epochs);
      FlagIf(ti, "--lr", common, "inference.lr_init", lr);
      if (freeze_speech) common.flags.emplace_back("inference.freeze_speech_encoder", true);
      return TrainInferenceCmd(common.Resolve(ti), common.force, manifest, resume);
    }
    if (tg->parsed()) {
      FlagIf(tg, "--iters", common, "gan.max_iters", iters);
      FlagIf(tg, "--batch-size", common, "gan.batch_size", batch);
      FlagIf(tg, "--r1-gamma", common, "gan.r1_gamma", r1_gamma);
      if (no_mil) common.flags.emplace_back("gan.use_mismatched_identity_loss", false);
      if (skip_transfer) common.flags.emplace_back("gan.skip_transfer", true);
      return TrainGanCmd(common.Resolve(tg), common.force, manifest, inference_dir);
    }
    if (synth->parsed()) return SynthData(common.Resolve(synth), common.force, identities, clips);
    if (import->parsed()) return ImportCsvCmd(common.Resolve(import), common.force, csv);
    if (gen->parsed())
      return GenerateCmd(common.Resolve(gen), common.force, gan_dir, speech, n, truncation);
    if (interp->parsed())
      return InterpolateCmd(common.Resolve(interp), common.force, gan_dir, manifest,
                            inference_dir, which, steps, rows, truncation);
    if (evalc->parsed()) return EvaluateCmd(common.Resolve(evalc), common.force, experiment, eval);
  } catch (const Error &e) {
    std::cerr << "error (" << ErrorKindName(e.kind()) << "): " << e.what() << '\n';
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error (data): " << e.what() << '\n';
    return ExitCodeFor(ErrorKind::kData);
  } catch (const c10::Error &e) {
    std::cerr << "error (data): " << e.what_without_backtrace() << '\n';
    return ExitCodeFor(ErrorKind::kData);
  } catch (const json::exception &e) {
    std::cerr << "error (config): " << e.what() << '\n';
    return ExitCodeFor(ErrorKind::kConfig);
  }
  return 2;
}

}  // namespace v2f::cli
