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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "aad/common.hpp"

namespace aad {

/// Positive class is "anomaly" (label 1) throughout.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    fail(ErrorCode::kLengthMismatch, "labels and predictions differ in length");
  }
  if (labels.empty()) fail(ErrorCode::kEmptyInput, "no samples to evaluate");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pos = labels[i] != 0;
    const bool hit = predictions[i] != 0;
    if (pos && hit) ++cm.tp;
    else if (pos) ++cm.fn;
    else if (hit) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f1_from(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

// 0/0 ratios are 0 by convention.
inline PrecisionRecallF1 precision_recall_f1(const ConfusionMatrix& cm) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  PrecisionRecallF1 r;
  r.precision = ratio(cm.tp, cm.tp + cm.fp);
  r.recall = ratio(cm.tp, cm.tp + cm.fn);
  r.f1 = f1_from(r.precision, r.recall);
  return r;
}

/// Rank-statistic AUC: P(score_pos > score_neg) with ties credited one half.
/// Ties share their mid-rank, which makes this equal to pairwise enumeration.
inline double roc_auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    fail(ErrorCode::kLengthMismatch, "labels and scores differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double n_pos = 0.0;
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0) {
        n_pos += 1.0;
        rank_sum += mid_rank;
      }
    }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(scores.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) {
    fail(ErrorCode::kSingleClassInput, "ROC AUC needs both positive and negative labels");
  }
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

/// Runs fn on a monotonic clock. Returns {result, seconds} (or just the
/// seconds for void procedures), rounded to millisecond resolution.
template <typename Fn>
auto timed(Fn&& fn) {
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t0) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0);
    return static_cast<double>(ms.count()) / 1000.0;
  };
  const auto t0 = Clock::now();
  if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
    std::forward<Fn>(fn)();
    return seconds_since(t0);
  } else {
    auto result = std::forward<Fn>(fn)();
    const double s = seconds_since(t0);
    return std::pair<decltype(result), double>{std::move(result), s};
  }
}

/// One row of a benchmark table.
struct EvalReport {
  std::string method;
  double train_time_s = 0.0;
  double inference_time_s = 0.0;
  double roc_auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionMatrix confusion;
  double threshold = 0.0;
};

inline EvalReport evaluate(std::string method, std::span<const int> labels,
                           std::span<const double> scores, double threshold) {
  std::vector<int> predictions(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) predictions[i] = scores[i] > threshold ? 1 : 0;
  EvalReport r;
  r.method = std::move(method);
  r.confusion = confusion(labels, predictions);
  const auto prf = precision_recall_f1(r.confusion);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  r.roc_auc = roc_auc(labels, scores);
  r.threshold = threshold;
  return r;
}

}  // namespace aad
