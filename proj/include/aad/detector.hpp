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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <variant>

#include "aad/common.hpp"
#include "aad/detector_api.hpp"
#include "aad/kmeans.hpp"
#include "aad/lstm_ae.hpp"
#include "aad/metrics.hpp"
#include "aad/ocsvm.hpp"

namespace aad {

/// Everything needed to fit any of the three detectors.
struct DetectorSettings {
  Pooling pooling = Pooling::kFlatten;
  std::optional<bool> standardize;  // unset: on for K-Means/OC-SVM, off for LSTM-AE
  KMeansConfig kmeans;
  OcSvmConfig ocsvm;
  int lstm_hidden = 64;
  LstmAeTrainConfig lstm;
  std::uint64_t seed = 0;

  bool standardize_for(DetectorKind kind) const {
    return standardize.value_or(kind != DetectorKind::kLstmAe);
  }
};

/// A trained detector of any kind with its preprocessing state.
struct DetectorModel {
  DetectorKind kind = DetectorKind::kKMeans;
  std::variant<KMeansModel, OcSvmModel, LstmAeModel> params;
  Pooling pooling = Pooling::kFlatten;
  std::optional<Standardizer> standardizer;
  Digest config_digest{};
  std::uint64_t seed = 0;
  double train_time_s = 0.0;
};

inline DetectorModel fit_detector(DetectorKind kind, const FrameTensor& train,
                                  const DetectorSettings& s, const Digest& digest = {}) {
  DetectorModel m;
  m.kind = kind;
  m.pooling = s.pooling;
  m.config_digest = digest;
  m.seed = s.seed;
  m.train_time_s = timed([&] {
    if (kind == DetectorKind::kLstmAe) {
      auto init = lstm_ae_init(static_cast<Eigen::Index>(train.n_mels), s.lstm_hidden, s.seed);
      LstmAeTrainConfig tc = s.lstm;
      tc.seed = s.seed;
      m.params = lstm_ae_train(std::move(init), train, tc);
      return;
    }
    FeatureMatrix x = s.standardize_for(kind)
                          ? vectorize(train, s.pooling, m.standardizer, /*fit_standardizer=*/true)
                          : vectorize(train, s.pooling);
    if (kind == DetectorKind::kKMeans) {
      KMeansConfig kc = s.kmeans;
      kc.seed = s.seed;
      m.params = kmeans_fit(x, kc);
    } else {
      m.params = ocsvm_fit(x, s.ocsvm);
    }
  });
  return m;
}

inline AnomalyScoreSeries score_detector(const DetectorModel& m, const FrameTensor& frames) {
  if (m.kind == DetectorKind::kLstmAe) {
    return lstm_ae_score(std::get<LstmAeModel>(m.params), frames);
  }
  std::optional<Standardizer> st = m.standardizer;
  FeatureMatrix x = st ? vectorize(frames, m.pooling, st, false) : vectorize(frames, m.pooling);
  if (m.kind == DetectorKind::kKMeans) return kmeans_score(std::get<KMeansModel>(m.params), x);
  return ocsvm_score(std::get<OcSvmModel>(m.params), x);
}

// Common block after the header: seed (two 32-bit halves), train time,
// pooling, standardizer width (0 when absent), mean, inverse std. The
// kind-specific parameter block follows.
inline void persist(const DetectorModel& m, std::ostream& os) {
  write_model_header(os, {kModelVersion, m.kind, m.config_digest});
  ParamWriter w(os);
  w.scalar(static_cast<double>(m.seed >> 32));
  w.scalar(static_cast<double>(m.seed & 0xFFFFFFFFu));
  w.scalar(m.train_time_s);
  w.scalar(static_cast<double>(m.pooling));
  w.scalar(m.standardizer ? static_cast<double>(m.standardizer->mean.size()) : 0.0);
  if (m.standardizer) {
    w.block(m.standardizer->mean);
    w.block(m.standardizer->inv_std);
  }
  std::visit([&](const auto& p) { write_params(w, p); }, m.params);
}

inline void persist(const DetectorModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  persist(m, out);
  if (!out) fail(ErrorCode::kIoFailure, "short write to " + path.string());
}

inline DetectorModel restore(std::istream& is) {
  const ModelHeader h = read_model_header(is);
  DetectorModel m;
  m.kind = h.kind;
  m.config_digest = h.config_digest;
  ParamReader r(is);
  const auto hi = static_cast<std::uint64_t>(r.count(4294967295.0));
  const auto lo = static_cast<std::uint64_t>(r.count(4294967295.0));
  m.seed = (hi << 32) | lo;
  m.train_time_s = r.scalar();
  const auto pooling = r.count(1);
  m.pooling = static_cast<Pooling>(pooling);
  const auto d = r.count();
  if (d > 0) {
    Standardizer st;
    st.mean.resize(d);
    st.inv_std.resize(d);
    r.block(st.mean);
    r.block(st.inv_std);
    m.standardizer = std::move(st);
  }
  switch (m.kind) {
    case DetectorKind::kKMeans: m.params = read_kmeans_params(r); break;
    case DetectorKind::kOcSvm: m.params = read_ocsvm_params(r); break;
    case DetectorKind::kLstmAe: m.params = read_lstm_ae_params(r); break;
  }
  return m;
}

inline DetectorModel restore(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  return restore(in);
}

}  // namespace aad
