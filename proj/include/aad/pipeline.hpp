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

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aad/audio_io.hpp"
#include "aad/calibration.hpp"
#include "aad/config.hpp"
#include "aad/detector.hpp"
#include "aad/features.hpp"
#include "aad/frame_io.hpp"
#include "aad/manifest.hpp"
#include "aad/metrics.hpp"
#include "aad/noise_gate.hpp"
#include "aad/synthgen.hpp"

namespace aad {

// ---------------------------------------------------------------------------
// Features

struct FeatureViews {
  MelSpectrogram mel_db;
  MelSpectrogram normalized;
  FrameTensor frames;
};

inline Framing framing_for(const RunConfig& cfg, int sample_rate) {
  return default_framing(sample_rate, cfg.hop_length, cfg.time_per_frame, cfg.hop_ratio);
}

/// Clip -> STFT -> Mel power -> dB [-> spectral gate] -> min-max -> frames.
inline FeatureViews compute_features(const AudioClip& input, const RunConfig& cfg) {
  return in_stage("features", [&] {
    AudioClip clip = input;
    if (cfg.rms_normalize) clip = rms_normalize(clip, cfg.target_rms).clip;
    const auto spec = stft(clip, cfg.n_fft, cfg.hop_length);
    const auto fb = mel_filterbank(clip.sample_rate, cfg.n_fft, cfg.n_mels, cfg.fmin,
                                   cfg.fmax > 0.0 ? cfg.fmax : -1.0);
    FeatureViews v;
    v.mel_db = power_to_db(mel_power(spec, fb));
    if (cfg.denoise) {
      const auto profile =
          estimate_noise_profile(v.mel_db, cfg.denoise_percentile, cfg.denoise_margin_db);
      v.mel_db = spectral_gate(v.mel_db, profile);
    }
    v.normalized = minmax_normalize(v.mel_db);
    const auto framing = framing_for(cfg, clip.sample_rate);
    v.frames = segment_frames(v.normalized, framing.frame_size, framing.hop_size);
    return v;
  });
}

inline FrameTensor extract_frames(const AudioClip& clip, const RunConfig& cfg) {
  return compute_features(clip, cfg).frames;
}

/// Stacks tensors with identical frame geometry. Origins are kept per
/// source, so the result is not a single contiguous framing.
inline FrameTensor concat_frames(const std::vector<FrameTensor>& parts) {
  if (parts.empty()) fail(ErrorCode::kEmptyInput, "nothing to concatenate");
  FrameTensor out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.n_mels != out.n_mels || p.frame_size != out.frame_size) {
      fail(ErrorCode::kShapeMismatch, "frame tensors differ in geometry");
    }
    out.data.insert(out.data.end(), p.data.begin(), p.data.end());
    out.origin_columns.insert(out.origin_columns.end(), p.origin_columns.begin(),
                              p.origin_columns.end());
    out.num_frames += p.num_frames;
  }
  return out;
}

struct SplitData {
  FrameTensor frames;
  std::vector<int> labels;  // all zero for unlabeled splits
};

inline SplitData load_split(const DatasetManifest& manifest, Split split, const RunConfig& cfg) {
  std::vector<FrameTensor> parts;
  SplitData out;
  for (const auto& rec : manifest.split(split)) {
    const auto clip = in_stage("load", [&] { return load_wav(rec.wav); });
    auto frames = extract_frames(clip, cfg);
    std::vector<int> labels(frames.num_frames, 0);
    if (rec.labels) {
      const auto intervals = in_stage("load", [&] { return load_labels(*rec.labels); });
      labels = frame_labels(intervals, frames);
    }
    out.labels.insert(out.labels.end(), labels.begin(), labels.end());
    parts.push_back(std::move(frames));
  }
  if (parts.empty()) {
    fail(ErrorCode::kInvalidArgument,
         std::string("manifest has no ") + std::string(split_name(split)) + " records");
  }
  out.frames = concat_frames(parts);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic dataset

enum class SynthMode { kKnocks, kRare };

struct SynthConfig {
  SynthMode mode = SynthMode::kKnocks;
  double normal_duration_s = 780.0;     // knocks: train + val
  double anomalous_duration_s = 210.0;  // knocks: calib + test
  double val_fraction = 0.125;          // of the normal duration (70:10)
  double calib_fraction = 0.5;          // of the anomalous duration
  double rate_per_min = 12.0;
  double rare_total_s = 1200.0;         // rare: 70/10/10/10 of this
  double rare_transient_s = 5.0;
  int sample_rate = 16000;
  std::uint64_t seed = 42;

  std::string to_text() const {
    std::ostringstream os;
    os << "mode = " << (mode == SynthMode::kKnocks ? "knocks" : "rare") << "\n"
       << "normal_duration_s = " << format_double(normal_duration_s) << "\n"
       << "anomalous_duration_s = " << format_double(anomalous_duration_s) << "\n"
       << "val_fraction = " << format_double(val_fraction) << "\n"
       << "calib_fraction = " << format_double(calib_fraction) << "\n"
       << "rate_per_min = " << format_double(rate_per_min) << "\n"
       << "rare_total_s = " << format_double(rare_total_s) << "\n"
       << "rare_transient_s = " << format_double(rare_transient_s) << "\n"
       << "sample_rate = " << sample_rate << "\n"
       << "seed = " << seed << "\n";
    return os.str();
  }
};

struct SynthSplit {
  Split split;
  LabeledClip clip;
};

/// Generates the four splits in memory. Train and val are background only;
/// calib and test carry knocks (knock mode) or one broadband transient each
/// (rare mode).
inline std::vector<SynthSplit> synthesize_splits(const SynthConfig& cfg) {
  const Digest digest = sha256(cfg.to_text());
  std::vector<SynthSplit> out;
  auto background = [&](double seconds, std::uint64_t stream) {
    return gen_normal(seconds, cfg.sample_rate, mix_seed(cfg.seed, stream), cfg.seed);
  };
  auto plain = [&](Split s, AudioClip clip, std::uint64_t stream) {
    LabeledClip lc;
    lc.clip = std::move(clip);
    lc.seed = mix_seed(cfg.seed, stream);
    lc.config_digest = digest;
    out.push_back({s, std::move(lc)});
  };

  if (cfg.mode == SynthMode::kKnocks) {
    const double val_s = cfg.normal_duration_s * cfg.val_fraction;
    const double calib_s = cfg.anomalous_duration_s * cfg.calib_fraction;
    plain(Split::kTrain, background(cfg.normal_duration_s - val_s, 0), 0);
    plain(Split::kVal, background(val_s, 1), 1);
    for (auto [split, seconds, stream] :
         {std::tuple{Split::kCalib, calib_s, 2ull},
          std::tuple{Split::kTest, cfg.anomalous_duration_s - calib_s, 3ull}}) {
      auto lc = inject_knocks(background(seconds, stream), cfg.rate_per_min,
                              mix_seed(cfg.seed, 100 + stream));
      lc.config_digest = digest;
      out.push_back({split, std::move(lc)});
    }
    return out;
  }

  const double part = cfg.rare_total_s * 0.1;
  plain(Split::kTrain, background(cfg.rare_total_s * 0.7, 0), 0);
  plain(Split::kVal, background(part, 1), 1);
  for (auto [split, stream] : {std::pair{Split::kCalib, 2ull}, std::pair{Split::kTest, 3ull}}) {
    Rng rng(mix_seed(cfg.seed, 200 + stream));
    const double margin = 1.0;
    const double start = rng.uniform(margin, part - cfg.rare_transient_s - margin);
    auto lc = inject_transient(background(part, stream), start, cfg.rare_transient_s,
                               mix_seed(cfg.seed, 100 + stream));
    lc.config_digest = digest;
    out.push_back({split, std::move(lc)});
  }
  return out;
}

/// Writes <split>.wav (+ <split>.labels.txt for labeled splits) and
/// manifest.tsv into out_dir; returns the manifest.
inline DatasetManifest write_synth_dataset(const std::filesystem::path& out_dir,
                                           const SynthConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot create " + out_dir.string());
  DatasetManifest m;
  for (const auto& s : synthesize_splits(cfg)) {
    const std::string name(split_name(s.split));
    ManifestRecord rec;
    rec.split = s.split;
    rec.wav = out_dir / (name + ".wav");
    save_wav(rec.wav, s.clip.clip);
    if (s.split == Split::kCalib || s.split == Split::kTest) {
      rec.labels = out_dir / (name + ".labels.txt");
      save_labels(*rec.labels, s.clip.intervals);
    }
    m.records.push_back(std::move(rec));
  }
  m.save(out_dir / "manifest.tsv");
  std::ofstream(out_dir / "synth_config.txt") << cfg.to_text();
  return m;
}

// ---------------------------------------------------------------------------
// Calibration and evaluation

inline CalibrationResult calibrate(const RunConfig& cfg, std::span<const double> val_scores,
                                   const SplitData* calib, std::span<const double> calib_scores,
                                   std::optional<DetectorKind> kind = std::nullopt) {
  return in_stage("calibrate", [&] {
    const auto candidates = sweep_thresholds(val_scores, cfg.percentile_grid, kind);
    const bool use_f1 = cfg.calibration == CalibrationMode::kF1 ||
                        (cfg.calibration == CalibrationMode::kAuto && calib != nullptr);
    if (use_f1) {
      if (!calib) fail(ErrorCode::kInvalidArgument, "F1 calibration needs a calib split");
      return select_by_f1(calib_scores, calib->labels, candidates);
    }
    return select_default(candidates, cfg.default_percentile);
  });
}

inline void save_calibration(const std::filesystem::path& path, const std::string& method,
                             const CalibrationResult& r) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << "# aad-calibration\n"
      << "method = " << method << "\n"
      << "mode = " << (r.selected_by_f1 ? "f1" : "default") << "\n"
      << "chosen_percentile = " << format_double(r.percentile) << "\n"
      << "chosen_threshold = " << format_double(r.threshold) << "\n"
      << "chosen_f1 = " << format_double(r.f1) << "\n"
      << "# sweep = percentile threshold precision recall f1\n";
  for (const auto& row : r.sweep) {
    out << "sweep = " << format_double(row.percentile) << ' ' << format_double(row.threshold)
        << ' ' << format_double(row.scores.precision) << ' ' << format_double(row.scores.recall)
        << ' ' << format_double(row.scores.f1) << "\n";
  }
}

inline CalibrationResult load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  CalibrationResult r;
  std::string line;
  bool have_threshold = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 3);
    if (key == "mode") r.selected_by_f1 = val == "f1";
    else if (key == "chosen_percentile") r.percentile = parse_double(val);
    else if (key == "chosen_threshold") {
      r.threshold = parse_double(val);
      have_threshold = true;
    } else if (key == "chosen_f1") r.f1 = parse_double(val);
    else if (key == "sweep") {
      std::istringstream ss(val);
      std::string a, b, c, d, e;
      ss >> a >> b >> c >> d >> e;
      r.sweep.push_back({parse_double(a), parse_double(b),
                         {parse_double(c), parse_double(d), parse_double(e)}});
    }
  }
  if (!have_threshold) fail(ErrorCode::kCorruptHeader, path.string() + " lacks a threshold");
  return r;
}

struct DetectorRun {
  DetectorModel model;
  CalibrationResult calibration;
  std::vector<double> val_scores;
  std::vector<double> calib_scores;
  std::vector<double> test_scores;
  EvalReport report;
  std::vector<std::string> warnings;
};

inline std::vector<std::string> model_warnings(const DetectorModel& m) {
  std::vector<std::string> w;
  if (const auto* km = std::get_if<KMeansModel>(&m.params); km && km->degenerate) {
    w.push_back("K-Means: fewer distinct training points than k; centres duplicated");
  }
  if (const auto* sv = std::get_if<OcSvmModel>(&m.params); sv && !sv->converged) {
    w.push_back("OC-SVM: SMO hit the iteration cap; final KKT violation " +
                format_double(sv->kkt_violation));
  }
  if (const auto* ae = std::get_if<LstmAeModel>(&m.params); ae && ae->non_finite_abort) {
    w.push_back("LSTM-AE: non-finite loss; training stopped at the last finite checkpoint");
  }
  return w;
}

struct BenchData {
  SplitData train;
  SplitData val;
  std::optional<SplitData> calib;
  SplitData test;
};

inline BenchData load_bench_data(const DatasetManifest& manifest, const RunConfig& cfg) {
  BenchData d;
  d.train = load_split(manifest, Split::kTrain, cfg);
  d.val = manifest.has(Split::kVal) ? load_split(manifest, Split::kVal, cfg) : d.train;
  if (manifest.has(Split::kCalib)) d.calib = load_split(manifest, Split::kCalib, cfg);
  d.test = load_split(manifest, Split::kTest, cfg);
  return d;
}

/// Fit on train, calibrate on val (+ calib), score and evaluate test.
inline DetectorRun run_detector(DetectorKind kind, const BenchData& data, const RunConfig& cfg) {
  DetectorRun run;
  run.model = in_stage("train", [&] {
    return fit_detector(kind, data.train.frames, cfg.detector_settings(), cfg.digest());
  });
  run.warnings = model_warnings(run.model);
  in_stage("score", [&] {
    run.val_scores = score_detector(run.model, data.val.frames).scores;
    if (data.calib) run.calib_scores = score_detector(run.model, data.calib->frames).scores;
  });
  run.calibration = calibrate(cfg, run.val_scores, data.calib ? &*data.calib : nullptr,
                              run.calib_scores, kind);
  const double inference_s = in_stage("score", [&] {
    return timed([&] { run.test_scores = score_detector(run.model, data.test.frames).scores; });
  });
  run.report = in_stage("eval", [&] {
    return evaluate(std::string(detector_name(kind)), data.test.labels, run.test_scores,
                    run.calibration.threshold);
  });
  run.report.train_time_s = run.model.train_time_s;
  run.report.inference_time_s = inference_s;
  return run;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"method", r.method},
          {"train_time_s", r.train_time_s},
          {"roc_auc", r.roc_auc},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"inference_time_s", r.inference_time_s},
          {"threshold", r.threshold},
          {"confusion",
           {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn},
            {"fn", r.confusion.fn}}}};
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.train_time_s = j.at("train_time_s").get<double>();
  r.roc_auc = j.at("roc_auc").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.inference_time_s = j.at("inference_time_s").get<double>();
  r.threshold = j.at("threshold").get<double>();
  const auto& c = j.at("confusion");
  r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                 c.at("tn").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  return r;
}

/// Aligned plain-text table with the benchmark columns, followed by the
/// confusion matrix of each method.
inline std::string format_table(std::span<const EvalReport> rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "Method" << std::right << std::setw(16) << "Train Time (s)"
     << std::setw(10) << "ROC AUC" << std::setw(11) << "Precision" << std::setw(9) << "Recall"
     << std::setw(10) << "F1-Score" << std::setw(20) << "Inference Time (s)" << "\n";
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.method << std::right << std::setprecision(4)
       << std::setw(16) << r.train_time_s << std::setw(10) << r.roc_auc << std::setw(11)
       << r.precision << std::setw(9) << r.recall << std::setw(10) << r.f1 << std::setw(20)
       << r.inference_time_s << "\n";
  }
  os << "\nConfusion matrices (rows: actual normal/anomaly, cols: predicted normal/anomaly)\n";
  for (const auto& r : rows) {
    os << r.method << "\n"
       << "  normal   " << std::setw(8) << r.confusion.tn << std::setw(8) << r.confusion.fp << "\n"
       << "  anomaly  " << std::setw(8) << r.confusion.fn << std::setw(8) << r.confusion.tp
       << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Inspect: numeric data behind the Mel, MFCC and FFT amplitude views.

struct InspectViews {
  MelSpectrogram mel_db;
  RowMatrix mfcc;
  AmplitudeSpectrum spectrum;
};

inline InspectViews inspect_clip(const AudioClip& clip, const RunConfig& cfg, int n_mfcc = 13) {
  InspectViews v;
  v.mel_db = in_stage("features", [&] {
    const auto fb = mel_filterbank(clip.sample_rate, cfg.n_fft, cfg.n_mels, cfg.fmin,
                                   cfg.fmax > 0.0 ? cfg.fmax : -1.0);
    return power_to_db(mel_power(stft(clip, cfg.n_fft, cfg.hop_length), fb));
  });
  v.mfcc = in_stage("features", [&] { return mfcc(v.mel_db, n_mfcc); });
  v.spectrum = in_stage("features", [&] { return fft_amplitude_spectrum(clip); });
  return v;
}

inline void write_inspect(const std::filesystem::path& out_dir, const InspectViews& v) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot create " + out_dir.string());
  save_matrix(out_dir / "mel_db.txt", "mel_db", v.mel_db.values);
  save_matrix(out_dir / "mfcc.txt", "mfcc", v.mfcc);
  RowMatrix spec(static_cast<Eigen::Index>(v.spectrum.frequencies.size()), 2);
  for (std::size_t k = 0; k < v.spectrum.frequencies.size(); ++k) {
    spec(static_cast<Eigen::Index>(k), 0) = v.spectrum.frequencies[k];
    spec(static_cast<Eigen::Index>(k), 1) = v.spectrum.amplitudes[k];
  }
  save_matrix(out_dir / "fft_amplitude.txt", "fft_amplitude", spec);
}

// ---------------------------------------------------------------------------
// Bench

struct BenchResult {
  std::vector<DetectorRun> runs;
  std::vector<int> test_labels;

  std::vector<EvalReport> reports() const {
    std::vector<EvalReport> r;
    for (const auto& run : runs) r.push_back(run.report);
    return r;
  }
};

inline nlohmann::json bench_json(const BenchResult& b, const RunConfig& cfg) {
  nlohmann::json j;
  j["config_digest"] = to_hex(cfg.digest());
  j["seed"] = cfg.seed;
  j["test_frames"] = b.test_labels.size();
  std::size_t positives = 0;
  for (int l : b.test_labels) positives += l != 0;
  j["test_anomalous_frames"] = positives;
  j["rows"] = nlohmann::json::array();
  for (const auto& run : b.runs) {
    auto row = to_json(run.report);
    row["calibration"] = {{"mode", run.calibration.selected_by_f1 ? "f1" : "default"},
                          {"percentile", run.calibration.percentile},
                          {"calib_f1", run.calibration.f1}};
    row["warnings"] = run.warnings;
    j["rows"].push_back(std::move(row));
  }
  return j;
}

/// Runs every configured detector. When out_dir is non-empty, writes
/// report.json / report.txt, per-detector models, calibration reports and
/// score files, the test frame labels and inspect views of the first test
/// record.
inline BenchResult bench(const DatasetManifest& manifest, const RunConfig& cfg,
                         const std::filesystem::path& out_dir = {}) {
  const BenchData data = load_bench_data(manifest, cfg);
  BenchResult result;
  result.test_labels = data.test.labels;
  for (auto kind : cfg.detectors) result.runs.push_back(run_detector(kind, data, cfg));
  if (out_dir.empty()) return result;

  in_stage("report", [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::kIoFailure, "cannot create " + out_dir.string());
    for (const auto& run : result.runs) {
      const auto dir = out_dir / RunConfig::detector_key(run.model.kind);
      std::filesystem::create_directories(dir, ec);
      persist(run.model, dir / "model.bin");
      save_calibration(dir / "calibration.txt", run.report.method, run.calibration);
      save_scores(dir / "scores_val.txt", run.val_scores);
      if (!run.calib_scores.empty()) save_scores(dir / "scores_calib.txt", run.calib_scores);
      save_scores(dir / "scores_test.txt", run.test_scores);
    }
    {
      std::ofstream lab(out_dir / "test_frame_labels.txt");
      for (int l : result.test_labels) lab << l << '\n';
    }
    std::ofstream(out_dir / "report.json") << bench_json(result, cfg).dump(2) << "\n";
    const auto rows = result.reports();
    std::ofstream(out_dir / "report.txt") << format_table(rows);
    std::ofstream(out_dir / "config.txt") << cfg.to_text();
  });
  const auto tests = manifest.split(Split::kTest);
  if (!tests.empty()) {
    write_inspect(out_dir / "inspect", inspect_clip(load_wav(tests.front().wav), cfg));
  }
  return result;
}

}  // namespace aad
