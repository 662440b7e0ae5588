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
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aad/audio_io.hpp"
#include "aad/common.hpp"
#include "aad/fft.hpp"

namespace aad {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Lower clamp of the dB stage, also the value spectral gating writes.
inline constexpr double kDbFloor = -80.0;

enum class WindowKind { kHann };

/// Non-negative-frequency STFT, one column per full window (no padding).
struct StftMatrix {
  Eigen::MatrixXcd values;  // [n_bins x n_cols]
  int n_fft = 0;
  int hop_length = 0;
  int sample_rate = 0;
  WindowKind window = WindowKind::kHann;

  Eigen::Index n_bins() const { return values.rows(); }
  Eigen::Index n_cols() const { return values.cols(); }
};

struct MelFilterbank {
  RowMatrix weights;              // [n_mels x n_bins]
  std::vector<double> edges_hz;   // n_mels + 2 triangle corner frequencies
  double fmin = 0.0;
  double fmax = 0.0;
  int sample_rate = 0;
  int n_fft = 0;

  Eigen::Index n_mels() const { return weights.rows(); }
};

enum class SpecStage { kPower, kDb, kNormalized };

inline std::string_view stage_name(SpecStage s) {
  switch (s) {
    case SpecStage::kPower: return "power";
    case SpecStage::kDb: return "db";
    case SpecStage::kNormalized: return "normalized";
  }
  return "?";
}

struct MelSpectrogram {
  RowMatrix values;  // [n_mels x n_cols]
  SpecStage stage = SpecStage::kPower;
  int sample_rate = 0;
  int hop_length = 0;

  Eigen::Index n_mels() const { return values.rows(); }
  Eigen::Index n_cols() const { return values.cols(); }
};

/// Overlapping column windows of a normalized spectrogram. Stored as float32
/// so the in-memory tensor and its on-disk form are identical.
struct FrameTensor {
  std::vector<float> data;  // [num_frames x n_mels x frame_size], row-major
  std::size_t num_frames = 0;
  std::size_t n_mels = 0;
  std::size_t frame_size = 0;
  std::size_t hop_size = 0;
  std::vector<std::size_t> origin_columns;
  int sample_rate = 0;
  int hop_length = 0;

  std::size_t frame_stride() const { return n_mels * frame_size; }

  float at(std::size_t f, std::size_t m, std::size_t t) const {
    return data[f * frame_stride() + m * frame_size + t];
  }

  std::span<const float> frame(std::size_t f) const {
    return {data.data() + f * frame_stride(), frame_stride()};
  }

  FrameTensor subset(std::span<const std::size_t> idx) const {
    FrameTensor out = *this;
    out.num_frames = idx.size();
    out.data.clear();
    out.origin_columns.clear();
    for (auto i : idx) {
      auto f = frame(i);
      out.data.insert(out.data.end(), f.begin(), f.end());
      out.origin_columns.push_back(origin_columns[i]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Periodic Hann window: w(m) = 0.5 - 0.5 cos(2 pi m / n).
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) w[m] = 0.5 - 0.5 * std::cos(2.0 * M_PI * m / n);
  return w;
}

inline Eigen::Index stft_num_columns(std::size_t n_samples, int n_fft, int hop_length) {
  return 1 + static_cast<Eigen::Index>((n_samples - n_fft) / hop_length);
}

inline StftMatrix stft(const AudioClip& clip, int n_fft = 1024, int hop_length = 512) {
  if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0) {
    fail(ErrorCode::kInvalidFftSize, "n_fft must be a power of two >= 2, got " +
                                         std::to_string(n_fft));
  }
  if (hop_length < 1) fail(ErrorCode::kInvalidArgument, "hop_length must be >= 1");
  if (clip.samples.size() < static_cast<std::size_t>(n_fft)) {
    fail(ErrorCode::kSignalTooShort, std::to_string(clip.samples.size()) +
                                         " samples < n_fft " + std::to_string(n_fft));
  }

  StftMatrix s;
  s.n_fft = n_fft;
  s.hop_length = hop_length;
  s.sample_rate = clip.sample_rate;
  const auto n_cols = stft_num_columns(clip.samples.size(), n_fft, hop_length);
  const auto n_bins = n_fft / 2 + 1;
  s.values.resize(n_bins, n_cols);

  const auto window = hann_window(n_fft);
  RealFft fft(static_cast<std::size_t>(n_fft));
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  for (Eigen::Index n = 0; n < n_cols; ++n) {
    const double* x = clip.samples.data() + n * hop_length;
    for (int m = 0; m < n_fft; ++m) frame[m] = x[m] * window[m];
    fft.forward(frame, std::span<std::complex<double>>(s.values.col(n).data(), n_bins));
  }
  return s;
}

/// HTK-warped triangular filters, area-normalized so each triangle
/// integrates to one over frequency.
inline MelFilterbank mel_filterbank(int sample_rate, int n_fft, int n_mels = 128,
                                    double fmin = 0.0, double fmax = -1.0) {
  if (fmax < 0.0) fmax = sample_rate / 2.0;
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    fail(ErrorCode::kInvalidBandRange, "need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (n_mels < 2) fail(ErrorCode::kInvalidBandRange, "n_mels must be >= 2");

  MelFilterbank fb;
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.sample_rate = sample_rate;
  fb.n_fft = n_fft;

  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  fb.edges_hz.resize(static_cast<std::size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    fb.edges_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  fb.edges_hz.front() = fmin;
  fb.edges_hz.back() = fmax;

  const int n_bins = n_fft / 2 + 1;
  fb.weights = RowMatrix::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = fb.edges_hz[m], mid = fb.edges_hz[m + 1], hi = fb.edges_hz[m + 2];
    const double scale = 2.0 / (hi - lo);
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      const double w = std::min(rise, fall);
      if (w > 0.0) fb.weights(m, k) = w * scale;
    }
  }
  return fb;
}

inline MelSpectrogram mel_power(const StftMatrix& s, const MelFilterbank& fb) {
  if (fb.weights.cols() != s.n_bins() || fb.n_fft != s.n_fft ||
      fb.sample_rate != s.sample_rate) {
    fail(ErrorCode::kShapeMismatch, "filterbank built for a different n_fft or sample rate");
  }
  MelSpectrogram out;
  out.stage = SpecStage::kPower;
  out.sample_rate = s.sample_rate;
  out.hop_length = s.hop_length;
  const Eigen::MatrixXd power = s.values.cwiseAbs2();
  out.values = fb.weights * power;
  return out;
}

inline MelSpectrogram power_to_db(const MelSpectrogram& mel) {
  if (mel.stage != SpecStage::kPower) {
    fail(ErrorCode::kInvalidArgument, "power_to_db expects a power-stage spectrogram");
  }
  const double ref = mel.values.size() > 0 ? mel.values.maxCoeff() : 0.0;
  if (!(ref > 0.0)) fail(ErrorCode::kAllZeroSpectrogram, "no positive cell to reference");
  MelSpectrogram out = mel;
  out.stage = SpecStage::kDb;
  out.values = mel.values.unaryExpr([ref](double p) {
    if (p <= 0.0) return kDbFloor;
    return std::max(kDbFloor, 10.0 * std::log10(p / ref));
  });
  return out;
}

/// Maps to [0, 1] by the global extremes; a constant input maps to zeros.
inline MelSpectrogram minmax_normalize(const MelSpectrogram& mel) {
  if (mel.values.size() == 0) fail(ErrorCode::kEmptyInput, "empty spectrogram");
  MelSpectrogram out = mel;
  out.stage = SpecStage::kNormalized;
  const double lo = mel.values.minCoeff();
  const double hi = mel.values.maxCoeff();
  if (!(hi > lo)) {
    out.values.setZero();
    return out;
  }
  const double range = hi - lo;
  out.values = mel.values.unaryExpr([lo, range](double x) { return (x - lo) / range; });
  return out;
}

inline std::size_t frame_count(std::size_t n_cols, std::size_t frame_size,
                               std::size_t hop_size) {
  if (n_cols < frame_size) return 0;
  return (n_cols - frame_size) / hop_size + 1;
}

inline FrameTensor segment_frames(const MelSpectrogram& mel, std::size_t frame_size,
                                  std::size_t hop_size) {
  if (frame_size < 1 || hop_size < 1) {
    fail(ErrorCode::kInvalidArgument, "frame_size and hop_size must be >= 1");
  }
  const auto n_cols = static_cast<std::size_t>(mel.n_cols());
  if (n_cols < frame_size) {
    fail(ErrorCode::kSpectrogramTooShort, std::to_string(n_cols) + " columns < frame_size " +
                                              std::to_string(frame_size));
  }
  FrameTensor ft;
  ft.n_mels = static_cast<std::size_t>(mel.n_mels());
  ft.frame_size = frame_size;
  ft.hop_size = hop_size;
  ft.num_frames = frame_count(n_cols, frame_size, hop_size);
  ft.sample_rate = mel.sample_rate;
  ft.hop_length = mel.hop_length;
  ft.data.resize(ft.num_frames * ft.frame_stride());
  ft.origin_columns.resize(ft.num_frames);
  for (std::size_t f = 0; f < ft.num_frames; ++f) {
    const std::size_t origin = f * hop_size;
    ft.origin_columns[f] = origin;
    float* dst = ft.data.data() + f * ft.frame_stride();
    for (std::size_t m = 0; m < ft.n_mels; ++m) {
      for (std::size_t t = 0; t < frame_size; ++t) {
        dst[m * frame_size + t] = static_cast<float>(mel.values(m, origin + t));
      }
    }
  }
  return ft;
}

/// Orthonormal DCT-II over the Mel axis of each column, first n_mfcc kept.
inline RowMatrix mfcc(const MelSpectrogram& mel_db, int n_mfcc = 13) {
  const auto n_mels = mel_db.n_mels();
  if (n_mfcc < 1 || n_mfcc > n_mels) {
    fail(ErrorCode::kTooManyCoefficients, "n_mfcc must lie in [1, n_mels]");
  }
  RowMatrix basis(n_mfcc, n_mels);
  for (int k = 0; k < n_mfcc; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_mels));
    for (Eigen::Index m = 0; m < n_mels; ++m) {
      basis(k, m) = s * std::cos(M_PI * k * (2.0 * m + 1.0) / (2.0 * n_mels));
    }
  }
  return basis * mel_db.values;
}

struct AmplitudeSpectrum {
  std::vector<double> frequencies;
  std::vector<double> amplitudes;
};

/// |DFT| of the whole clip divided by its length, bins 0 .. floor(N/2).
inline AmplitudeSpectrum fft_amplitude_spectrum(const AudioClip& clip) {
  const std::size_t n = clip.samples.size();
  if (n == 0) fail(ErrorCode::kEmptyAudio, "empty clip");
  RealFft fft(n);
  const auto spectrum = fft.forward(clip.samples);
  AmplitudeSpectrum out;
  out.frequencies.resize(spectrum.size());
  out.amplitudes.resize(spectrum.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    out.frequencies[k] = static_cast<double>(k) * clip.sample_rate / static_cast<double>(n);
    out.amplitudes[k] = std::abs(spectrum[k]) / static_cast<double>(n);
  }
  return out;
}

struct Framing {
  std::size_t frame_size = 0;
  std::size_t hop_size = 0;

  bool operator==(const Framing&) const = default;
};

inline Framing default_framing(int sample_rate, int hop_length, double time_per_frame = 0.512,
                               double hop_ratio = 0.2) {
  if (sample_rate <= 0 || hop_length <= 0 || !(time_per_frame > 0.0) || !(hop_ratio > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "framing parameters must be positive");
  }
  const double frame = std::round(time_per_frame * sample_rate / hop_length);
  Framing f;
  f.frame_size = static_cast<std::size_t>(std::max(1.0, frame));
  f.hop_size = static_cast<std::size_t>(
      std::max(1.0, std::round(hop_ratio * static_cast<double>(f.frame_size))));
  return f;
}

}  // namespace aad
