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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aad/common.hpp"
#include "aad/features.hpp"

namespace aad {

enum class Pooling : std::uint32_t { kFlatten = 0, kMeanPoolTime = 1 };

inline std::string_view pooling_name(Pooling p) {
  return p == Pooling::kFlatten ? "flatten" : "mean_pool_time";
}

/// Per-dimension affine map fitted on training rows. Zero-variance
/// dimensions carry scale 0 and map to 0.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_std;

  static Standardizer fit(const RowMatrix& rows) {
    Standardizer s;
    const double n = static_cast<double>(rows.rows());
    s.mean = rows.colwise().sum() / n;
    s.inv_std.resize(rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const double var = (rows.col(c).array() - s.mean(c)).square().sum() / n;
      const double sd = std::sqrt(var);
      s.inv_std(c) = sd > 1e-12 * (1.0 + std::abs(s.mean(c))) ? 1.0 / sd : 0.0;
    }
    return s;
  }

  void apply(RowMatrix& rows) const {
    if (rows.cols() != mean.size()) {
      fail(ErrorCode::kDimensionMismatch, "standardizer fitted for a different width");
    }
    rows.rowwise() -= mean;
    rows.array().rowwise() *= inv_std.array();
  }
};

struct FeatureMatrix {
  RowMatrix rows;  // [num_frames x d]
  Pooling pooling = Pooling::kFlatten;
  std::vector<std::size_t> origins;

  Eigen::Index dim() const { return rows.cols(); }
};

inline RowMatrix pool_frames(const FrameTensor& frames, Pooling pooling) {
  if (frames.num_frames == 0) fail(ErrorCode::kEmptyInput, "no frames to vectorize");
  const auto n = static_cast<Eigen::Index>(frames.num_frames);
  if (pooling == Pooling::kFlatten) {
    const auto d = static_cast<Eigen::Index>(frames.frame_stride());
    return Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
               frames.data.data(), n, d)
        .cast<double>();
  }
  RowMatrix out(n, static_cast<Eigen::Index>(frames.n_mels));
  for (std::size_t f = 0; f < frames.num_frames; ++f) {
    for (std::size_t m = 0; m < frames.n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t t = 0; t < frames.frame_size; ++t) acc += frames.at(f, m, t);
      out(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(m)) =
          acc / static_cast<double>(frames.frame_size);
    }
  }
  return out;
}

/// Flattens or time-pools frames into rows. With fit_standardizer the
/// statistics of these rows are stored into `standardizer` and applied;
/// otherwise previously fitted statistics are applied.
inline FeatureMatrix vectorize(const FrameTensor& frames, Pooling pooling,
                               std::optional<Standardizer>& standardizer, bool fit_standardizer) {
  FeatureMatrix fm;
  fm.pooling = pooling;
  fm.origins = frames.origin_columns;
  fm.rows = pool_frames(frames, pooling);
  if (fit_standardizer) {
    standardizer = Standardizer::fit(fm.rows);
  } else if (!standardizer) {
    fail(ErrorCode::kStandardizerMissing, "no fitted standardizer to apply");
  }
  standardizer->apply(fm.rows);
  return fm;
}

/// Unstandardized variant.
inline FeatureMatrix vectorize(const FrameTensor& frames, Pooling pooling) {
  FeatureMatrix fm;
  fm.pooling = pooling;
  fm.origins = frames.origin_columns;
  fm.rows = pool_frames(frames, pooling);
  return fm;
}

/// One score per frame; higher means more anomalous.
struct AnomalyScoreSeries {
  std::vector<double> scores;
  std::vector<std::size_t> origins;

  std::size_t size() const { return scores.size(); }
};

// ---------------------------------------------------------------------------
// Model file layout: magic, u32 version, u32 kind, 32-byte config digest,
// then little-endian f64 parameter blocks.

inline constexpr char kModelMagic[8] = {'A', 'A', 'D', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

struct ModelHeader {
  std::uint32_t version = kModelVersion;
  DetectorKind kind = DetectorKind::kKMeans;
  Digest config_digest{};
};

inline void write_model_header(std::ostream& os, const ModelHeader& h) {
  os.write(kModelMagic, sizeof(kModelMagic));
  binio::write<std::uint32_t>(os, h.version);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(h.kind));
  os.write(reinterpret_cast<const char*>(h.config_digest.data()), 32);
}

inline ModelHeader read_model_header(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8)) fail(ErrorCode::kCorruptModelFile, "truncated model header");
  if (std::memcmp(magic, kModelMagic, 8) != 0) {
    fail(ErrorCode::kCorruptModelFile, "bad model magic");
  }
  ModelHeader h;
  std::uint32_t kind = 0;
  if (!binio::read(is, h.version)) fail(ErrorCode::kCorruptModelFile, "truncated model header");
  if (h.version != kModelVersion) {
    fail(ErrorCode::kVersionMismatch, "model file version " + std::to_string(h.version) +
                                          ", expected " + std::to_string(kModelVersion));
  }
  if (!binio::read(is, kind)) fail(ErrorCode::kCorruptModelFile, "truncated model header");
  if (kind < 1 || kind > 3) fail(ErrorCode::kCorruptModelFile, "unknown detector kind");
  h.kind = static_cast<DetectorKind>(kind);
  if (!is.read(reinterpret_cast<char*>(h.config_digest.data()), 32)) {
    fail(ErrorCode::kCorruptModelFile, "truncated model header");
  }
  return h;
}

inline ModelHeader read_model_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  return read_model_header(in);
}

/// Sequential f64 block writer/reader for kind-specific parameters.
class ParamWriter {
 public:
  explicit ParamWriter(std::ostream& os) : os_(os) {}

  void scalar(double v) { binio::write<double>(os_, v); }

  template <typename Derived>
  void block(const Eigen::DenseBase<Derived>& m) {
    // Row-major traversal regardless of storage order.
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) scalar(m(r, c));
    }
  }

 private:
  std::ostream& os_;
};

class ParamReader {
 public:
  explicit ParamReader(std::istream& is) : is_(is) {}

  double scalar() {
    double v;
    if (!binio::read(is_, v)) fail(ErrorCode::kCorruptModelFile, "model file truncated");
    return v;
  }

  // Non-negative integer stored as f64; bounded to reject garbage sizes.
  Eigen::Index count(double limit = 1e9) {
    const double v = scalar();
    if (!(v >= 0.0 && v <= limit) || v != std::floor(v)) {
      fail(ErrorCode::kCorruptModelFile, "implausible size field in model file");
    }
    return static_cast<Eigen::Index>(v);
  }

  template <typename Derived>
  void block(Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scalar();
    }
  }

 private:
  std::istream& is_;
};

}  // namespace aad
