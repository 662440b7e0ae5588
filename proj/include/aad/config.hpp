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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aad/calibration.hpp"
#include "aad/common.hpp"
#include "aad/detector.hpp"
#include "aad/frame_io.hpp"

namespace aad {

enum class CalibrationMode { kAuto, kF1, kDefault };

/// Every tunable of the pipeline. Defaults reproduce the reference setup.
struct RunConfig {
  // features
  int n_fft = 1024;
  int hop_length = 512;
  int n_mels = 128;
  double fmin = 0.0;
  double fmax = 0.0;  // 0: sample_rate / 2
  double time_per_frame = 0.512;
  double hop_ratio = 0.2;
  bool rms_normalize = false;
  double target_rms = 0.1;
  bool denoise = false;
  double denoise_percentile = 20.0;
  double denoise_margin_db = 6.0;

  // detectors
  std::vector<DetectorKind> detectors = {DetectorKind::kKMeans, DetectorKind::kOcSvm,
                                         DetectorKind::kLstmAe};
  Pooling pooling = Pooling::kFlatten;
  std::optional<bool> standardize;  // unset: per-detector default
  int kmeans_k = 8;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-4;
  double ocsvm_nu = 0.1;
  std::optional<double> ocsvm_gamma;  // unset: "scale"
  double ocsvm_tol = 1e-3;
  long long ocsvm_max_iter = 10'000'000;
  int ocsvm_cache_mb = 256;
  int lstm_hidden = 64;
  int lstm_epochs = 30;
  int lstm_batch = 64;
  double lstm_lr = 1e-3;

  // calibration
  std::vector<double> percentile_grid = default_percentile_grid();
  double default_percentile = 95.0;
  CalibrationMode calibration = CalibrationMode::kAuto;

  std::uint64_t seed = 42;

  DetectorSettings detector_settings() const {
    DetectorSettings s;
    s.pooling = pooling;
    s.standardize = standardize;
    s.kmeans.k = kmeans_k;
    s.kmeans.max_iter = kmeans_max_iter;
    s.kmeans.tol = kmeans_tol;
    s.ocsvm.nu = ocsvm_nu;
    s.ocsvm.gamma = ocsvm_gamma;
    s.ocsvm.tol = ocsvm_tol;
    s.ocsvm.max_iterations = ocsvm_max_iter;
    s.ocsvm.cache_bytes = static_cast<std::size_t>(ocsvm_cache_mb) << 20;
    s.lstm_hidden = lstm_hidden;
    s.lstm.epochs = lstm_epochs;
    s.lstm.batch_size = lstm_batch;
    s.lstm.learning_rate = lstm_lr;
    s.seed = seed;
    return s;
  }

  /// Canonical "key = value" form, keys sorted.
  std::map<std::string, std::string> to_map() const {
    auto num = [](double v) { return format_double(v); };
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    std::map<std::string, std::string> kv;
    kv["n_fft"] = std::to_string(n_fft);
    kv["hop_length"] = std::to_string(hop_length);
    kv["n_mels"] = std::to_string(n_mels);
    kv["fmin"] = num(fmin);
    kv["fmax"] = num(fmax);
    kv["time_per_frame"] = num(time_per_frame);
    kv["hop_ratio"] = num(hop_ratio);
    kv["rms_normalize"] = flag(rms_normalize);
    kv["target_rms"] = num(target_rms);
    kv["denoise"] = flag(denoise);
    kv["denoise_percentile"] = num(denoise_percentile);
    kv["denoise_margin_db"] = num(denoise_margin_db);
    std::string dets;
    for (auto k : detectors) {
      if (!dets.empty()) dets += ",";
      dets += detector_key(k);
    }
    kv["detectors"] = dets;
    kv["pooling"] = std::string(pooling_name(pooling));
    kv["standardize"] = standardize ? flag(*standardize) : "auto";
    kv["kmeans_k"] = std::to_string(kmeans_k);
    kv["kmeans_max_iter"] = std::to_string(kmeans_max_iter);
    kv["kmeans_tol"] = num(kmeans_tol);
    kv["ocsvm_nu"] = num(ocsvm_nu);
    kv["ocsvm_gamma"] = ocsvm_gamma ? num(*ocsvm_gamma) : "scale";
    kv["ocsvm_tol"] = num(ocsvm_tol);
    kv["ocsvm_max_iter"] = std::to_string(ocsvm_max_iter);
    kv["ocsvm_cache_mb"] = std::to_string(ocsvm_cache_mb);
    kv["lstm_hidden"] = std::to_string(lstm_hidden);
    kv["lstm_epochs"] = std::to_string(lstm_epochs);
    kv["lstm_batch"] = std::to_string(lstm_batch);
    kv["lstm_lr"] = num(lstm_lr);
    std::string grid;
    for (double p : percentile_grid) {
      if (!grid.empty()) grid += ",";
      grid += num(p);
    }
    kv["percentile_grid"] = grid;
    kv["default_percentile"] = num(default_percentile);
    kv["calibration"] = calibration == CalibrationMode::kAuto  ? "auto"
                        : calibration == CalibrationMode::kF1 ? "f1"
                                                               : "default";
    kv["seed"] = std::to_string(seed);
    return kv;
  }

  std::string to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : to_map()) os << k << " = " << v << "\n";
    return os.str();
  }

  Digest digest() const { return sha256(to_text()); }

  static std::string detector_key(DetectorKind k) {
    switch (k) {
      case DetectorKind::kKMeans: return "kmeans";
      case DetectorKind::kOcSvm: return "ocsvm";
      case DetectorKind::kLstmAe: return "lstm_ae";
    }
    return "?";
  }

  static DetectorKind parse_detector(const std::string& s) {
    if (s == "kmeans") return DetectorKind::kKMeans;
    if (s == "ocsvm") return DetectorKind::kOcSvm;
    if (s == "lstm_ae") return DetectorKind::kLstmAe;
    fail(ErrorCode::kUsage, "unknown detector '" + s + "' (kmeans, ocsvm, lstm_ae)");
  }

  /// Applies one setting; unknown keys and malformed values are usage errors.
  void set(const std::string& key, const std::string& value) {
    auto as_int = [&]() -> long long {
      const double v = as_number(key, value);
      if (v != std::floor(v)) fail(ErrorCode::kUsage, key + " must be an integer");
      return static_cast<long long>(v);
    };
    auto as_bool = [&]() {
      if (value == "true" || value == "1" || value == "on") return true;
      if (value == "false" || value == "0" || value == "off") return false;
      fail(ErrorCode::kUsage, key + " must be true or false");
    };
    auto as_list = [&]() {
      std::vector<std::string> out;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
      }
      return out;
    };

    if (key == "n_fft") n_fft = static_cast<int>(as_int());
    else if (key == "hop_length") hop_length = static_cast<int>(as_int());
    else if (key == "n_mels") n_mels = static_cast<int>(as_int());
    else if (key == "fmin") fmin = as_number(key, value);
    else if (key == "fmax") fmax = as_number(key, value);
    else if (key == "time_per_frame") time_per_frame = as_number(key, value);
    else if (key == "hop_ratio") hop_ratio = as_number(key, value);
    else if (key == "rms_normalize") rms_normalize = as_bool();
    else if (key == "target_rms") target_rms = as_number(key, value);
    else if (key == "denoise") denoise = as_bool();
    else if (key == "denoise_percentile") denoise_percentile = as_number(key, value);
    else if (key == "denoise_margin_db") denoise_margin_db = as_number(key, value);
    else if (key == "detectors") {
      detectors.clear();
      for (const auto& d : as_list()) detectors.push_back(parse_detector(d));
    } else if (key == "pooling") {
      if (value == "flatten") pooling = Pooling::kFlatten;
      else if (value == "mean_pool_time") pooling = Pooling::kMeanPoolTime;
      else fail(ErrorCode::kUsage, "pooling must be flatten or mean_pool_time");
    } else if (key == "standardize") {
      if (value == "auto") standardize.reset();
      else standardize = as_bool();
    } else if (key == "kmeans_k") kmeans_k = static_cast<int>(as_int());
    else if (key == "kmeans_max_iter") kmeans_max_iter = static_cast<int>(as_int());
    else if (key == "kmeans_tol") kmeans_tol = as_number(key, value);
    else if (key == "ocsvm_nu") ocsvm_nu = as_number(key, value);
    else if (key == "ocsvm_gamma") {
      if (value == "scale") ocsvm_gamma.reset();
      else ocsvm_gamma = as_number(key, value);
    } else if (key == "ocsvm_tol") ocsvm_tol = as_number(key, value);
    else if (key == "ocsvm_max_iter") ocsvm_max_iter = as_int();
    else if (key == "ocsvm_cache_mb") ocsvm_cache_mb = static_cast<int>(as_int());
    else if (key == "lstm_hidden") lstm_hidden = static_cast<int>(as_int());
    else if (key == "lstm_epochs") lstm_epochs = static_cast<int>(as_int());
    else if (key == "lstm_batch") lstm_batch = static_cast<int>(as_int());
    else if (key == "lstm_lr") lstm_lr = as_number(key, value);
    else if (key == "percentile_grid") {
      percentile_grid.clear();
      for (const auto& p : as_list()) {
        const double v = as_number(key, p);
        if (!(v >= 0.0 && v <= 100.0)) fail(ErrorCode::kUsage, "percentiles must lie in [0, 100]");
        percentile_grid.push_back(v);
      }
      if (percentile_grid.empty()) fail(ErrorCode::kUsage, "percentile_grid is empty");
    } else if (key == "default_percentile") default_percentile = as_number(key, value);
    else if (key == "calibration") {
      if (value == "auto") calibration = CalibrationMode::kAuto;
      else if (value == "f1") calibration = CalibrationMode::kF1;
      else if (value == "default") calibration = CalibrationMode::kDefault;
      else fail(ErrorCode::kUsage, "calibration must be auto, f1 or default");
    } else if (key == "seed") {
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        fail(ErrorCode::kUsage, "seed must be an unsigned 64-bit integer");
      }
    }
    else fail(ErrorCode::kUsage, "unknown config key '" + key + "'");
  }

  static RunConfig from_map(const std::map<std::string, std::string>& kv) {
    RunConfig c;
    for (const auto& [k, v] : kv) c.set(k, v);
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) { return from_map(read_key_values(path)); }

 private:
  static double as_number(const std::string& key, const std::string& value) {
    try {
      return parse_double(value);
    } catch (const Error&) {
      fail(ErrorCode::kUsage, key + ": not a number: '" + value + "'");
    }
  }
};

}  // namespace aad
