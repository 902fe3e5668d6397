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

// Acceptance suite: runs every criterion and prints one PASS/FAIL line per
// criterion. Criteria 6, 7 and 10 drive the v2f command-line tool on the toy
// preset; the others run in-process on tiny networks.

#include <sys/resource.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "checks.hpp"
#include "json.hpp"
#include "v2f/config.hpp"
#include "v2f/gan.hpp"
#include "v2f/sinc.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace v2f;
using namespace v2f::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// CPU seconds consumed by finished child processes.
double ChildCpuSeconds() {
  rusage u{};
  getrusage(RUSAGE_CHILDREN, &u);
  return u.ru_utime.tv_sec + u.ru_stime.tv_sec + 1e-6 * (u.ru_utime.tv_usec + u.ru_stime.tv_usec);
}

class Cli {
 public:
  Cli(fs::path binary, fs::path log) : binary_(std::move(binary)), log_(std::move(log)) {}

  // Runs the tool and returns its exit code; output is appended to the log.
  int operator()(const std::vector<std::string> &args) const {
    std::string cmd = Quote(binary_.string());
    for (const auto &a : args) cmd += " " + Quote(a);
    {
      std::ofstream(log_, std::ios::app) << "$ " << cmd << '\n';
    }
    cmd += " >> " + Quote(log_.string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  // Like operator() but turns a non-zero exit into an exception.
  void Must(const std::vector<std::string> &args) const {
    const int code = (*this)(args);
    if (code != 0) {
      std::string what = "v2f";
      for (const auto &a : args) what += " " + a;
      throw std::runtime_error(what + " exited with " + std::to_string(code) + " (see " +
                               log_.string() + ")");
    }
  }

 private:
  static std::string Quote(const std::string &s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
  }
  fs::path binary_;
  fs::path log_;
};

json ReadJson(const fs::path &p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing " + p.string());
  return json::parse(in);
}

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Outcome LossAlgebra() {
  auto r = CheckLossAlgebra(1, 20);
  const bool ok = r.antisymmetry == 0.0 && r.reduction == 0.0 && r.decomposition <= 1e-5 &&
                  r.ln2 <= 1e-9;
  return {ok, "antisymmetry " + Fmt(r.antisymmetry) + ", reduction " + Fmt(r.reduction) +
                  ", decomposition " + Fmt(r.decomposition) + ", ln2 " + Fmt(r.ln2)};
}

Outcome GradientOracle() {
  std::map<std::string, double> worst;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto upd = [&](const std::string &k, double v) { worst[k] = std::max(worst[k], v); };
    upd("matching", MatchingLossNetworkGradError(seed));
    upd("matching_emb", MatchingLossEmbeddingGradError(seed));
    upd("L_D", DiscriminatorLossGradError(seed, true));
    upd("L_G", GeneratorLossGradError(seed, true));
    upd("L_D_plain", DiscriminatorLossGradError(seed, false));
    upd("L_G_plain", GeneratorLossGradError(seed, false));
    upd("r1", R1GradError(seed));
  }
  bool ok = true;
  std::string detail = "max rel err:";
  for (const auto &[k, v] : worst) {
    ok = ok && v < 1e-4;
    detail += " " + k + " " + Fmt(v);
  }
  return {ok, detail};
}

Outcome Softmax() {
  auto s = CheckSoftmax(10000, 3);
  bool ok = s.all_finite && s.argmax_consistent && s.max_sum_error <= 1e-6 &&
            s.max_abs_logit >= 5e3 && s.cases >= 10000;
  std::string detail = "sum err " + Fmt(s.max_sum_error) + " over " + std::to_string(s.cases) +
                       " cases (max |logit| " + Fmt(s.max_abs_logit) + ")";
  for (int k : {2, 10}) {
    auto c = UntrainedMatchingAccuracy(k, MatchMode::kVoiceToFace, 10, 100 + k);
    const double gap = std::abs(c.accuracy - 1.0 / k);
    ok = ok && c.trials >= 2000 && gap <= 0.03;
    detail += "; K=" + std::to_string(k) + " acc " + Fmt(100 * c.accuracy) + "% over " +
              std::to_string(c.trials) + " trials";
  }
  return {ok, detail};
}

Outcome SincBandPass() {
  SincReport all;
  for (const Preset &p : {PaperPreset(), ToyPreset(), TinyPreset()})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      torch::manual_seed(seed);
      SincConv sinc(p.speech.sinc, p.speech.sample_rate);
      Merge(all, CheckBandPass(sinc->Kernels().detach(), p.speech.sample_rate));
    }
  const int init_filters = all.filters;
  Merge(all, AdversariallyTrainedSinc(1, 200));
  Merge(all, MatchingTrainedSinc(2, 60));
  const bool ok = all.worst_dc_ratio < 0.1 && all.worst_nyquist_ratio < 0.1;
  return {ok, std::to_string(all.filters) + " filters (" + std::to_string(init_filters) +
                  " initialized), worst DC " + Fmt(all.worst_dc_ratio) + ", worst Nyquist " +
                  Fmt(all.worst_nyquist_ratio) + " of peak"};
}

Outcome AdaINCheck() {
  auto r = CheckAdaIN(5, 50);
  return {r.max_mean_error <= 1e-4 && r.max_std_error <= 1e-2,
          std::to_string(r.channels) + " channels, mean err " + Fmt(r.max_mean_error) +
              ", std err " + Fmt(r.max_std_error)};
}

Outcome Retrieval() {
  auto o = CheckRetrievalOracle(8, 20);
  bool ok = o.rank_mismatches == 0 && o.topk_mismatches == 0 && o.rankings > 0;
  std::string detail = std::to_string(o.rankings) + " rankings, " +
                       std::to_string(o.rank_mismatches) + " rank / " +
                       std::to_string(o.topk_mismatches) + " top-k mismatches; chance";
  for (auto m : {DistanceMetric::kL1, DistanceMetric::kL2, DistanceMetric::kCosine}) {
    auto c = RandomRetrieval(9, m);
    ok = ok && c.queries >= 1000 && c.top1 >= 0.5 && c.top1 <= 2.0 && c.top10 >= 7.0 &&
         c.top10 <= 13.0;
    detail += " " + std::string(DistanceMetricName(m)) + " " + Fmt(c.top1) + "%/" +
              Fmt(c.top10) + "%";
  }
  return {ok, detail};
}

Outcome Truncation() {
  auto r = CheckTruncation(10, 1.0, 1000000);
  const double rel = std::abs(r.variance - r.monte_carlo) / r.monte_carlo;
  return {r.max_abs <= 1.0 && rel <= 0.02 && r.draws >= 1000000,
          "max |z| " + Fmt(r.max_abs) + ", variance " + Fmt(r.variance) + " vs oracle " +
              Fmt(r.monte_carlo) + " (closed form " + Fmt(r.closed_form) + ", rel err " +
              Fmt(rel) + ") over " + std::to_string(r.draws) + " draws"};
}

// ---------------------------------------------------------------------------

struct Workspace {
  fs::path root;
  Cli cli;
};

// Toy inference run shared by criteria 6 and 7.
struct InferenceRun {
  fs::path manifest, dir;
  double cpu_seconds = 0.0;
};

InferenceRun TrainToyInference(const Workspace &w) {
  InferenceRun run{w.root / "c6_data" / "manifest.jsonl", w.root / "c6_inference"};
  if (fs::exists(run.dir / "summary.json")) return run;
  const double cpu0 = ChildCpuSeconds();
  w.cli.Must({"synth-data", "--preset", "toy", "--identities", "20", "--clips", "10", "--seed",
              "1", "--force", "-o", (w.root / "c6_data").string()});
  w.cli.Must({"train-inference", "--preset", "toy", "--manifest", run.manifest.string(),
              "--mode", "vf", "--k", "10", "--seed", "1", "--force", "-o", run.dir.string()});
  run.cpu_seconds = ChildCpuSeconds() - cpu0;
  return run;
}

Outcome InferenceConvergence(const Workspace &w) {
  auto run = TrainToyInference(w);
  auto s = ReadJson(run.dir / "summary.json");
  const double two = 100 * s["val_matching"]["2way"]["mean_acc"].get<double>();
  const double ten = 100 * s["val_matching"]["10way"]["mean_acc"].get<double>();
  const double minutes = run.cpu_seconds / 60.0;
  return {two >= 90.0 && ten >= 60.0 && minutes <= 30.0,
          "2-way " + Fmt(two) + "%, 10-way " + Fmt(ten) + "% in " + Fmt(minutes) +
              " CPU-min (" + std::to_string(s["epochs_run"].get<int>()) + " epochs)"};
}

Outcome GanDirection(const Workspace &w) {
  auto inf = TrainToyInference(w);
  const std::vector<std::string> common{"--preset", "toy", "--manifest", inf.manifest.string(),
                                        "--inference-dir", inf.dir.string(), "--seed", "1",
                                        "--force"};
  auto train = [&](const std::string &name, std::vector<std::string> extra) {
    const auto dir = w.root / ("c7_" + name);
    std::vector<std::string> args{"train-gan"};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), extra.begin(), extra.end());
    args.insert(args.end(), {"-o", dir.string()});
    w.cli.Must(args);
    return dir;
  };
  auto evaluate = [&](const std::string &exp, const fs::path &gan, const std::string &tag,
                      std::vector<std::string> extra) {
    const auto dir = w.root / ("c7_eval_" + tag);
    std::vector<std::string> args{"evaluate", exp, "--gan-dir", gan.string()};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), extra.begin(), extra.end());
    args.insert(args.end(), {"-o", dir.string()});
    w.cli.Must(args);
    return ReadJson(dir / (exp + ".json"))["result"];
  };
  const auto relid = train("relid", {});
  const auto plain = train("plain", {"--no-mismatched-identity-loss"});
  const auto ablation = train("no_transfer", {"--skip-transfer"});

  auto q1 = evaluate("qta1", relid, "qta1_relid", {"--pairs", "500"});
  const bool a = q1["status"] == "defined" && q1["n"].get<int>() >= 500 &&
                 q1["r"].get<double>() > 0.0 && q1["p_value"].get<double>() < 0.01;
  auto q2 = evaluate("qta2-vf", relid, "qta2_relid_vs_plain",
                     {"--other-gan-dir", plain.string(), "--draws", "10"});
  const bool b = q2["wins"].get<double>() > 0.5 * (q2["n"].get<double>() - q2["ties"].get<double>()) &&
                 q2["binomial_p"].get<double>() < 0.05;
  auto q3 = evaluate("qta1", ablation, "qta1_no_transfer", {"--pairs", "500"});
  const bool c = q3["status"] == "undefined" ||
                 (q3["status"] == "defined" && std::abs(q3["r"].get<double>()) < 0.1);
  std::string detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " r " + Fmt(q1.value("r", NAN)) +
                       " p " + Fmt(q1.value("p_value", NAN)) + " n " + q1["n"].dump() +
                       "; (b) " + (b ? "ok" : "FAIL") + " relid preferred " + q2["wins"].dump() +
                       "/" + q2["n"].dump() + " (ties " + q2["ties"].dump() + ") p " +
                       Fmt(q2["binomial_p"].get<double>()) + "; (c) " + (c ? "ok" : "FAIL") +
                       " no-transfer r " + Fmt(q3.value("r", NAN));
  return {a && b && c, detail};
}

// Required keys of each evaluation report's "result".
bool SchemaValid(const std::string &exp, const json &report, std::string &why) {
  auto has = [&](const json &j, std::initializer_list<const char *> keys) {
    for (const char *k : keys)
      if (!j.contains(k)) {
        why = exp + " lacks '" + k + "'";
        return false;
      }
    return true;
  };
  if (!has(report, {"experiment", "seed", "result", "reference"})) return false;
  const json &r = report["result"];
  if (exp == "qta1") {
    if (!has(r, {"n", "status", "scatter", "mean_cd_condition", "mean_cd_face"})) return false;
    if (r["status"] == "defined" && !has(r, {"r", "p_value"})) return false;
    return r["scatter"]["cd_condition"].size() == r["n"].get<std::size_t>();
  }
  if (exp == "qta1-control") {
    if (!has(r, {"same_attribute", "different_attribute"})) return false;
    return has(r["same_attribute"], {"mean_cd_condition", "mean_cd_face", "n_pairs"}) &&
           has(r["different_attribute"], {"mean_cd_condition", "mean_cd_face", "n_pairs"});
  }
  if (exp == "qta2-vf" || exp == "qta2-fv") {
    if (!has(r, {"n", "wins", "ties", "fraction", "tie_rate", "binomial_p"})) return false;
    const double f = r["fraction"].get<double>();
    if (f < 0.0 || f > 1.0) {
      why = exp + " fraction out of range";
      return false;
    }
    return true;
  }
  if (exp == "qta3") {
    if (!r.is_array() || r.size() != 3) {
      why = "qta3 should report three metrics";
      return false;
    }
    for (const auto &m : r) {
      if (!has(m, {"metric", "top_k_acc", "gallery_size", "n_queries"})) return false;
      for (const auto &[k, v] : m["top_k_acc"].items())
        if (v.get<double>() < 0.0 || v.get<double>() > 100.0) {
          why = "qta3 accuracy out of range";
          return false;
        }
    }
    return true;
  }
  why = "unknown experiment " + exp;
  return false;
}

const std::vector<std::string> kExperiments{"qta1", "qta1-control", "qta2-vf", "qta2-fv",
                                            "qta3"};

// Full pipeline on a small toy configuration; returns the run root.
fs::path SmokePipeline(const Workspace &w, const std::string &tag) {
  const auto root = w.root / ("c10_" + tag);
  fs::remove_all(root);
  const auto data = root / "data", inf = root / "inference", gan = root / "gan";
  const std::vector<std::string> base{"--preset", "toy", "--seed", "7"};
  auto with = [&](std::vector<std::string> args, std::vector<std::string> more) {
    args.insert(args.end(), base.begin(), base.end());
    args.insert(args.end(), more.begin(), more.end());
    return args;
  };
  w.cli.Must(with({"synth-data"}, {"--identities", "10", "--clips", "3", "-o", data.string()}));
  const auto manifest = (data / "manifest.jsonl").string();
  w.cli.Must(with({"train-inference"},
                  {"--manifest", manifest, "--k", "2", "--epochs", "2", "--set",
                   "inference.steps_per_epoch=5", "-o", inf.string()}));
  w.cli.Must(with({"train-gan"}, {"--manifest", manifest, "--inference-dir", inf.string(),
                                  "--iters", "10", "--set", "gan.sample_every=5", "-o",
                                  gan.string()}));
  fs::path wav;
  for (const auto &e : fs::directory_iterator(data / "audio"))
    if (wav.empty() || e.path() < wav) wav = e.path();
  w.cli.Must(with({"generate"}, {"--gan-dir", gan.string(), "--speech", wav.string(), "--n",
                                 "4", "--truncation", "1.0", "-o", (root / "generate").string()}));
  for (const auto &exp : kExperiments) {
    std::vector<std::string> more{"--gan-dir", gan.string(), "--inference-dir", inf.string(),
                                  "--manifest", manifest, "--pairs", "50", "-o",
                                  (root / ("eval_" + exp)).string()};
    if (exp == "qta3") more.insert(more.end(), {"--metric", "all"});
    w.cli.Must(with({"evaluate", exp}, more));
  }
  return root;
}

Outcome EndToEnd(const Workspace &w) {
  const auto a = SmokePipeline(w, "a");
  std::string why;
  for (const auto &exp : kExperiments)
    if (!SchemaValid(exp, ReadJson(a / ("eval_" + exp) / (exp + ".json")), why))
      return {false, "schema: " + why};
  const auto b = SmokePipeline(w, "b");
  std::size_t compared = 0;
  std::set<fs::path> rel_a, rel_b;
  for (const auto &e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.insert(fs::relative(e.path(), a));
  for (const auto &e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.insert(fs::relative(e.path(), b));
  if (rel_a != rel_b) return {false, "the two runs wrote different file sets"};
  for (const auto &rel : rel_a) {
    const auto ext = rel.extension();
    if (ext != ".json" && ext != ".jsonl" && ext != ".png") continue;
    ++compared;
    if (Slurp(a / rel) != Slurp(b / rel))
      return {false, rel.string() + " differs between two runs with the same seed"};
  }
  return {compared > 0, "all commands exited 0; " + std::to_string(kExperiments.size()) +
                            " reports schema-valid; " + std::to_string(compared) +
                            " JSON/PNG outputs bitwise identical across two seeded runs"};
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"v2f acceptance suite"};
  std::string work = "acceptance_work";
  std::string cli_path = V2F_CLI_PATH;
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory (wiped at start)");
  app.add_option("--cli", cli_path, "Path to the v2f tool");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  fs::remove_all(work);
  fs::create_directories(work);
  Workspace w{fs::absolute(work), Cli(cli_path, fs::absolute(work) / "cli.log")};

  struct Criterion {
    int id;
    std::string name;
    double limit_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "loss algebra", 60, LossAlgebra},
      {2, "gradient oracle", 300, GradientOracle},
      {3, "softmax and chance accuracy", 0, Softmax},
      {4, "sinc band-pass", 60, SincBandPass},
      {5, "AdaIN statistics", 0, AdaINCheck},
      {6, "toy inference convergence", 0, [&] { return InferenceConvergence(w); }},
      {7, "toy GAN direction checks", 0, [&] { return GanDirection(w); }},
      {8, "retrieval oracle and chance", 0, Retrieval},
      {9, "latent truncation", 0, Truncation},
      {10, "end-to-end smoke and reproducibility", 0, [&] { return EndToEnd(w); }},
  };

  int failed = 0, ran = 0;
  for (const auto &c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      o.pass = false;
      o.detail += "; exceeded " + Fmt(c.limit_seconds) + " s";
    }
    failed += !o.pass;
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (o.pass ? "PASS" : "FAIL")
              << " - " << o.detail << " [" << Fmt(secs) << " s]" << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
