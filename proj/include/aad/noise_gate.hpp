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

#include <vector>

#include "aad/calibration.hpp"
#include "aad/common.hpp"
#include "aad/features.hpp"

namespace aad {

/// Per-band noise floor in the Mel-dB domain.
struct NoiseProfile {
  std::vector<double> floor_db;  // one entry per Mel band
  double margin_db = 0.0;
};

inline NoiseProfile estimate_noise_profile(const MelSpectrogram& mel_db, double percentile_p,
                                           double margin_db = 6.0) {
  if (mel_db.stage != SpecStage::kDb) {
    fail(ErrorCode::kInvalidArgument, "noise profile needs a dB-stage spectrogram");
  }
  if (mel_db.n_cols() < 10) {
    fail(ErrorCode::kTooFewColumns, "noise profile needs at least 10 columns");
  }
  if (!(percentile_p > 0.0 && percentile_p < 100.0)) {
    fail(ErrorCode::kInvalidArgument, "percentile must lie in (0, 100)");
  }
  if (!(margin_db >= 0.0)) fail(ErrorCode::kInvalidArgument, "margin_db must be >= 0");
  NoiseProfile profile;
  profile.margin_db = margin_db;
  profile.floor_db.resize(static_cast<std::size_t>(mel_db.n_mels()));
  std::vector<double> row(static_cast<std::size_t>(mel_db.n_cols()));
  for (Eigen::Index b = 0; b < mel_db.n_mels(); ++b) {
    for (Eigen::Index n = 0; n < mel_db.n_cols(); ++n) row[n] = mel_db.values(b, n);
    profile.floor_db[b] = percentile(row, percentile_p);
  }
  return profile;
}

/// Cells at or below floor + margin drop to the dB floor; others pass through.
inline MelSpectrogram spectral_gate(const MelSpectrogram& mel_db, const NoiseProfile& profile) {
  if (mel_db.stage != SpecStage::kDb) {
    fail(ErrorCode::kInvalidArgument, "spectral gate needs a dB-stage spectrogram");
  }
  if (static_cast<Eigen::Index>(profile.floor_db.size()) != mel_db.n_mels()) {
    fail(ErrorCode::kShapeMismatch, "noise profile band count differs from spectrogram");
  }
  MelSpectrogram out = mel_db;
  for (Eigen::Index b = 0; b < out.n_mels(); ++b) {
    const double gate = profile.floor_db[b] + profile.margin_db;
    for (Eigen::Index n = 0; n < out.n_cols(); ++n) {
      if (out.values(b, n) <= gate) out.values(b, n) = kDbFloor;
    }
  }
  return out;
}

}  // namespace aad
