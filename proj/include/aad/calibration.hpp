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

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "aad/common.hpp"
#include "aad/metrics.hpp"

namespace aad {

/// Linear interpolation between closest ranks: position p/100 * (n-1) in the
/// ascending order statistics.
inline double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorCode::kEmptyInput, "percentile of empty input");
  if (!(p >= 0.0 && p <= 100.0)) fail(ErrorCode::kInvalidArgument, "p must lie in [0, 100]");
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::span<const double> values, double p) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return percentile_sorted(sorted, p);
}

struct ThresholdCandidate {
  double percentile = 0.0;
  double threshold = 0.0;
  std::optional<DetectorKind> source;
};

inline std::vector<double> default_percentile_grid() {
  std::vector<double> g;
  for (int p = 5; p <= 95; p += 5) g.push_back(p);
  return g;
}

/// One candidate per grid percentile of the normal-only validation scores.
inline std::vector<ThresholdCandidate> sweep_thresholds(
    std::span<const double> val_scores, std::span<const double> grid,
    std::optional<DetectorKind> source = std::nullopt) {
  if (val_scores.empty()) fail(ErrorCode::kEmptyInput, "no validation scores");
  std::vector<double> sorted(val_scores.begin(), val_scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> ps(grid.begin(), grid.end());
  std::sort(ps.begin(), ps.end());
  std::vector<ThresholdCandidate> out;
  out.reserve(ps.size());
  for (double p : ps) out.push_back({p, percentile_sorted(sorted, p), source});
  return out;
}

struct SweepRow {
  double percentile = 0.0;
  double threshold = 0.0;
  PrecisionRecallF1 scores;
};

struct CalibrationResult {
  double threshold = 0.0;
  double percentile = 0.0;
  double f1 = 0.0;
  bool selected_by_f1 = false;
  std::vector<SweepRow> sweep;
};

/// Picks the candidate with the best F1 on a labeled calibration split.
/// Anomalies are flagged by score > threshold; ties go to the lowest
/// percentile.
inline CalibrationResult select_by_f1(std::span<const double> scores, std::span<const int> labels,
                                      std::span<const ThresholdCandidate> candidates) {
  if (scores.size() != labels.size()) {
    fail(ErrorCode::kLengthMismatch, "scores and labels differ in length");
  }
  if (candidates.empty()) fail(ErrorCode::kEmptyInput, "no threshold candidates");
  const auto positives = std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    fail(ErrorCode::kDegenerateLabels, "calibration labels must contain both classes");
  }

  CalibrationResult r;
  r.selected_by_f1 = true;
  std::vector<int> pred(scores.size());
  std::optional<std::size_t> best;
  for (const auto& c : candidates) {
    for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] > c.threshold ? 1 : 0;
    const auto prf = precision_recall_f1(confusion(labels, pred));
    r.sweep.push_back({c.percentile, c.threshold, prf});
    const auto idx = r.sweep.size() - 1;
    if (!best) {
      best = idx;
      continue;
    }
    const auto& b = r.sweep[*best];
    if (prf.f1 > b.scores.f1 || (prf.f1 == b.scores.f1 && c.percentile < b.percentile)) {
      best = idx;
    }
  }
  r.threshold = r.sweep[*best].threshold;
  r.percentile = r.sweep[*best].percentile;
  r.f1 = r.sweep[*best].scores.f1;
  return r;
}

/// Fallback when no labeled calibration split exists: the candidate at the
/// requested percentile (95 unless configured), or the highest one below it.
inline CalibrationResult select_default(std::span<const ThresholdCandidate> candidates,
                                        double percentile = 95.0) {
  if (candidates.empty()) fail(ErrorCode::kEmptyInput, "no threshold candidates");
  const ThresholdCandidate* pick = &candidates.front();
  for (const auto& c : candidates) {
    if (c.percentile <= percentile) pick = &c;
  }
  CalibrationResult r;
  r.threshold = pick->threshold;
  r.percentile = pick->percentile;
  for (const auto& c : candidates) r.sweep.push_back({c.percentile, c.threshold, {}});
  return r;
}

}  // namespace aad
