// Copyright 2026 The AAD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// aad: acoustic anomaly detection command-line tool.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aad/aad.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required) {
  cmd->add_option("--config", o.config_path, "key = value run configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--set", o.overrides, "override one config entry, key=value");
  auto* out = cmd->add_option("--out", o.out, "output path");
  if (out_required) out->required();
}

aad::RunConfig resolve_config(const CommonOptions& o) {
  aad::RunConfig cfg = o.config_path.empty() ? aad::RunConfig{} : aad::RunConfig::load(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) aad::fail(aad::ErrorCode::kUsage, "--set expects key=value");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

aad::FrameTensor frames_from(const std::vector<std::string>& frame_files,
                             const std::string& wav, const aad::RunConfig& cfg) {
  if (!wav.empty()) return aad::extract_frames(aad::load_wav(wav), cfg);
  std::vector<aad::FrameTensor> parts;
  for (const auto& f : frame_files) parts.push_back(aad::load_frames(f));
  return aad::concat_frames(parts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic anomaly detection: features, detectors, calibration and benchmarks"};
  app.require_subcommand(1);

  // synth
  CommonOptions synth_o;
  aad::SynthConfig synth_cfg;
  std::string synth_mode = "knocks";
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset + manifest");
  add_common(synth, synth_o, true);
  synth->add_option("--mode", synth_mode, "knocks | rare")
      ->check(CLI::IsMember({"knocks", "rare"}));
  synth->add_option("--normal-duration", synth_cfg.normal_duration_s,
                    "seconds of normal audio (train + val), knocks mode");
  synth->add_option("--anomalous-duration", synth_cfg.anomalous_duration_s,
                    "seconds of knock-injected audio (calib + test), knocks mode");
  synth->add_option("--rate", synth_cfg.rate_per_min, "knocks per minute");
  synth->add_option("--duration", synth_cfg.rare_total_s, "total seconds, rare mode");
  synth->add_option("--transient", synth_cfg.rare_transient_s, "transient length, rare mode");

  // features
  CommonOptions feat_o;
  std::string feat_in;
  auto* features = app.add_subcommand("features", "WAV -> frame tensor (AADFRAME + .meta)");
  add_common(features, feat_o, true);
  features->add_option("--in", feat_in, "input WAV")->required()->check(CLI::ExistingFile);

  // train
  CommonOptions train_o;
  std::string train_manifest, train_detector = "kmeans";
  std::vector<std::string> train_frames;
  auto* train = app.add_subcommand("train", "fit one detector on normal-only frames");
  add_common(train, train_o, true);
  train->add_option("--detector", train_detector, "kmeans | ocsvm | lstm_ae")
      ->check(CLI::IsMember({"kmeans", "ocsvm", "lstm_ae"}));
  auto* tm = train->add_option("--manifest", train_manifest, "use the manifest's train split");
  auto* tf = train->add_option("--frames", train_frames, "frame tensor file(s)");
  tm->excludes(tf);

  // score
  CommonOptions score_o;
  std::string score_model, score_wav;
  std::vector<std::string> score_frames;
  auto* score = app.add_subcommand("score", "score frames with a trained model");
  add_common(score, score_o, true);
  score->add_option("--model", score_model, "model file")->required()->check(CLI::ExistingFile);
  auto* sf = score->add_option("--frames", score_frames, "frame tensor file(s)");
  auto* sw = score->add_option("--in", score_wav, "WAV to featurize and score");
  sf->excludes(sw);

  // calibrate
  CommonOptions cal_o;
  std::string cal_model, cal_manifest;
  auto* calibrate = app.add_subcommand("calibrate", "percentile threshold sweep + selection");
  add_common(calibrate, cal_o, true);
  calibrate->add_option("--model", cal_model, "model file")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--manifest", cal_manifest, "dataset manifest (val, calib splits)")
      ->required()
      ->check(CLI::ExistingFile);

  // eval
  CommonOptions eval_o;
  std::string eval_scores, eval_labels, eval_intervals, eval_frames, eval_calibration, eval_method;
  std::optional<double> eval_threshold;
  auto* eval = app.add_subcommand("eval", "metrics for a score file against labels");
  add_common(eval, eval_o, false);
  eval->add_option("--scores", eval_scores, "score file")->required()->check(CLI::ExistingFile);
  auto* el = eval->add_option("--frame-labels", eval_labels, "one 0/1 label per line");
  auto* ei = eval->add_option("--intervals", eval_intervals, "interval labels file");
  eval->add_option("--frames", eval_frames, "frame tensor whose framing the scores follow");
  el->excludes(ei);
  auto* et = eval->add_option("--threshold", eval_threshold, "decision threshold");
  auto* ec = eval->add_option("--calibration", eval_calibration, "calibration report");
  et->excludes(ec);
  eval->add_option("--method", eval_method, "row name in the report");

  // bench
  CommonOptions bench_o;
  std::string bench_manifest;
  auto* benchc = app.add_subcommand("bench", "train, calibrate and evaluate every detector");
  add_common(benchc, bench_o, true);
  benchc->add_option("--manifest", bench_manifest, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);

  // inspect
  CommonOptions insp_o;
  std::string insp_in;
  int insp_mfcc = 13;
  auto* inspect = app.add_subcommand("inspect", "Mel-dB, MFCC and FFT amplitude matrices");
  add_common(inspect, insp_o, true);
  inspect->add_option("--in", insp_in, "input WAV")->required()->check(CLI::ExistingFile);
  inspect->add_option("--n-mfcc", insp_mfcc, "MFCC coefficients kept");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      synth_cfg.mode = synth_mode == "rare" ? aad::SynthMode::kRare : aad::SynthMode::kKnocks;
      synth_cfg.seed = synth_o.seed.value_or(resolve_config(synth_o).seed);
      const auto m = aad::in_stage("synth", [&] { return aad::write_synth_dataset(synth_o.out, synth_cfg); });
      std::cout << "wrote " << m.records.size() << " records to "
                << (fs::path(synth_o.out) / "manifest.tsv").string() << "\n";
    } else if (*features) {
      const auto cfg = resolve_config(feat_o);
      const auto clip = aad::in_stage("load", [&] { return aad::load_wav(feat_in); });
      const auto frames = aad::extract_frames(clip, cfg);
      ensure_parent(feat_o.out);
      aad::save_frames(feat_o.out, frames);
      std::cout << frames.num_frames << " frames of " << frames.n_mels << "x"
                << frames.frame_size << " -> " << feat_o.out << "\n";
    } else if (*train) {
      const auto cfg = resolve_config(train_o);
      const auto kind = aad::RunConfig::parse_detector(train_detector);
      aad::FrameTensor frames;
      if (!train_manifest.empty()) {
        frames = aad::load_split(aad::DatasetManifest::load(train_manifest), aad::Split::kTrain, cfg)
                     .frames;
      } else if (!train_frames.empty()) {
        frames = frames_from(train_frames, "", cfg);
      } else {
        aad::fail(aad::ErrorCode::kUsage, "train needs --manifest or --frames");
      }
      const auto model = aad::in_stage("train", [&] {
        return aad::fit_detector(kind, frames, cfg.detector_settings(), cfg.digest());
      });
      for (const auto& w : aad::model_warnings(model)) std::cerr << "warning: " << w << "\n";
      ensure_parent(train_o.out);
      aad::persist(model, fs::path(train_o.out));
      std::cout << aad::detector_name(kind) << " trained on " << frames.num_frames
                << " frames in " << model.train_time_s << " s -> " << train_o.out << "\n";
    } else if (*score) {
      const auto cfg = resolve_config(score_o);
      if (score_frames.empty() && score_wav.empty()) {
        aad::fail(aad::ErrorCode::kUsage, "score needs --frames or --in");
      }
      const auto model = aad::in_stage("load", [&] { return aad::restore(fs::path(score_model)); });
      const auto frames = frames_from(score_frames, score_wav, cfg);
      const auto s = aad::in_stage("score", [&] { return aad::score_detector(model, frames); });
      ensure_parent(score_o.out);
      aad::save_scores(score_o.out, s.scores);
      std::cout << s.size() << " scores -> " << score_o.out << "\n";
    } else if (*calibrate) {
      const auto cfg = resolve_config(cal_o);
      const auto manifest = aad::DatasetManifest::load(cal_manifest);
      const auto model = aad::in_stage("load", [&] { return aad::restore(fs::path(cal_model)); });
      const auto val = aad::load_split(manifest, aad::Split::kVal, cfg);
      std::optional<aad::SplitData> calib;
      if (manifest.has(aad::Split::kCalib)) calib = aad::load_split(manifest, aad::Split::kCalib, cfg);
      const auto val_scores = aad::score_detector(model, val.frames).scores;
      std::vector<double> calib_scores;
      if (calib) calib_scores = aad::score_detector(model, calib->frames).scores;
      const auto r = aad::calibrate(cfg, val_scores, calib ? &*calib : nullptr, calib_scores,
                                    model.kind);
      ensure_parent(cal_o.out);
      aad::save_calibration(cal_o.out, std::string(aad::detector_name(model.kind)), r);
      std::cout << "threshold " << r.threshold << " at percentile " << r.percentile
                << (r.selected_by_f1 ? " (max F1 " + std::to_string(r.f1) + ")" : " (default)")
                << " -> " << cal_o.out << "\n";
    } else if (*eval) {
      const auto scores = aad::load_scores(eval_scores);
      std::vector<int> labels;
      if (!eval_labels.empty()) {
        std::ifstream in(eval_labels);
        if (!in) aad::fail(aad::ErrorCode::kIoFailure, "cannot open " + eval_labels);
        for (int l; in >> l;) labels.push_back(l);
      } else if (!eval_intervals.empty()) {
        if (eval_frames.empty()) {
          aad::fail(aad::ErrorCode::kUsage, "--intervals needs --frames for the framing");
        }
        labels = aad::frame_labels(aad::load_labels(eval_intervals), aad::load_frames(eval_frames));
      } else {
        aad::fail(aad::ErrorCode::kUsage, "eval needs --frame-labels or --intervals");
      }
      double threshold = 0.0;
      if (eval_threshold) threshold = *eval_threshold;
      else if (!eval_calibration.empty()) threshold = aad::load_calibration(eval_calibration).threshold;
      else aad::fail(aad::ErrorCode::kUsage, "eval needs --threshold or --calibration");
      const auto report = aad::in_stage("eval", [&] {
        return aad::evaluate(eval_method.empty() ? "scores" : eval_method, labels, scores, threshold);
      });
      const auto j = aad::to_json(report);
      if (!eval_o.out.empty()) {
        ensure_parent(eval_o.out);
        std::ofstream(eval_o.out) << j.dump(2) << "\n";
      }
      std::cout << aad::format_table(std::vector<aad::EvalReport>{report});
    } else if (*benchc) {
      const auto cfg = resolve_config(bench_o);
      const auto manifest = aad::DatasetManifest::load(bench_manifest);
      const auto result = aad::bench(manifest, cfg, bench_o.out);
      for (const auto& run : result.runs) {
        for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
      }
      std::cout << aad::format_table(result.reports());
    } else if (*inspect) {
      const auto cfg = resolve_config(insp_o);
      const auto clip = aad::in_stage("load", [&] { return aad::load_wav(insp_in); });
      aad::write_inspect(insp_o.out, aad::inspect_clip(clip, cfg, insp_mfcc));
      std::cout << "mel_db.txt, mfcc.txt, fft_amplitude.txt -> " << insp_o.out << "\n";
    }
  } catch (const aad::Error& e) {
    std::cerr << "aad: " << e.describe() << "\n";
    return aad::exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "aad: [io] " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "aad: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
