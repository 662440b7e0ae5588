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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aad/audio_io.hpp"
#include "aad/common.hpp"
#include "aad/features.hpp"
#include "aad/fft.hpp"

namespace aad {

struct AnomalyInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string kind = "knock";
};

struct LabeledClip {
  AudioClip clip;
  std::vector<AnomalyInterval> intervals;  // sorted, non-overlapping
  std::uint64_t seed = 0;
  Digest config_digest{};
};

/// splitmix64 step; derives independent sub-seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline void peak_normalize(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (double& v : x) v *= peak / m;
  }
}

/// Machine-like background: a few slowly amplitude-modulated harmonic tones
/// plus broadband noise band-limited below 2 kHz, peak-normalized to 0.5.
/// `machine_seed` fixes the tone recipe (fundamental, partials, modulation
/// rates) so several clips can share one machine; `seed` drives phases and
/// noise.
inline AudioClip gen_normal(double duration_s, int sample_rate, std::uint64_t seed,
                            std::uint64_t machine_seed) {
  if (!(duration_s >= 1.0)) fail(ErrorCode::kInvalidArgument, "duration must be >= 1 s");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  Rng machine(machine_seed);
  Rng rng(seed);
  std::vector<double> x(n, 0.0);

  const int tones = 4 + static_cast<int>(machine.below(5));
  const double f0 = machine.uniform(50.0, 400.0);
  for (int i = 0; i < tones; ++i) {
    // Harmonic partials of f0, folded back under 1.9 kHz.
    double f = f0 * (i + 1);
    while (f > 1900.0) f -= 1850.0 * machine.uniform(0.5, 1.0);
    f = std::max(f, 50.0);
    const double amp = 1.0 / (1.0 + 0.5 * i);
    const double am_rate = machine.uniform(0.05, 0.9);
    const double am_depth = machine.uniform(0.1, 0.4);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double am_phase = rng.uniform(0.0, 2.0 * M_PI);
    const double w = 2.0 * M_PI * f / sample_rate;
    const double wa = 2.0 * M_PI * am_rate / sample_rate;
    for (std::size_t t = 0; t < n; ++t) {
      const double env = 1.0 + am_depth * std::sin(wa * static_cast<double>(t) + am_phase);
      x[t] += amp * env * std::sin(w * static_cast<double>(t) + phase);
    }
  }
  const double tone_rms = rms(x);

  std::vector<double> noise(n);
  for (double& v : noise) v = rng.normal();
  noise = band_limit(noise, sample_rate, 0.0, 2000.0);
  const double noise_rms = rms(noise);
  const double noise_gain = noise_rms > 0.0 ? 0.35 * tone_rms / noise_rms : 0.0;
  for (std::size_t t = 0; t < n; ++t) x[t] += noise_gain * noise[t];

  peak_normalize(x, 0.5);
  AudioClip clip;
  clip.samples = std::move(x);
  clip.sample_rate = sample_rate;
  return clip;
}

inline AudioClip gen_normal(double duration_s, int sample_rate = 16000, std::uint64_t seed = 0) {
  return gen_normal(duration_s, sample_rate, seed, seed);
}

struct KnockConfig {
  double min_duration_s = 0.030;
  double max_duration_s = 0.080;
  double band_lo_hz = 2000.0;
  double band_hi_hz = 6000.0;
  double peak_to_rms = 3.0;  // knock peak relative to background RMS (>= 2)
};

/// Adds exponentially decaying band-limited bursts at Poisson arrival times.
/// Candidates that would overlap the previous knock or run past the end of
/// the clip are rejected.
inline LabeledClip inject_knocks(const AudioClip& clip, double rate_per_min, std::uint64_t seed,
                                 const KnockConfig& cfg = {}) {
  const double duration = clip.duration_s();
  if (!(rate_per_min > 0.0) || rate_per_min * duration / 60.0 < 1.0) {
    fail(ErrorCode::kClipTooShort, "clip too short for one expected knock at this rate");
  }
  LabeledClip out;
  out.clip = clip;
  out.seed = seed;
  Rng rng(seed);
  const double bg_rms = rms(clip.samples);
  const int sr = clip.sample_rate;
  const double rate_per_s = rate_per_min / 60.0;

  double t = 0.0;
  double prev_end = 0.0;
  for (;;) {
    t += rng.exponential(rate_per_s);
    const double dur = rng.uniform(cfg.min_duration_s, cfg.max_duration_s);
    const std::uint64_t burst_seed = rng.next_u64();
    if (t + dur > duration) break;
    if (t < prev_end) continue;

    const auto s0 = static_cast<std::size_t>(std::llround(t * sr));
    const auto len = static_cast<std::size_t>(std::llround(dur * sr));
    if (s0 + len > out.clip.samples.size() || len < 2) break;

    Rng brng(burst_seed);
    std::vector<double> burst(len);
    for (double& v : burst) v = brng.normal();
    burst = band_limit(burst, sr, cfg.band_lo_hz, cfg.band_hi_hz);
    const double tau = dur / 5.0;
    for (std::size_t i = 0; i < len; ++i) burst[i] *= std::exp(-static_cast<double>(i) / sr / tau);
    peak_normalize(burst, cfg.peak_to_rms * bg_rms);
    for (std::size_t i = 0; i < len; ++i) {
      double& v = out.clip.samples[s0 + i];
      v = std::clamp(v + burst[i], -1.0, 1.0);
    }
    const double start = static_cast<double>(s0) / sr;
    const double end = static_cast<double>(s0 + len) / sr;
    out.intervals.push_back({start, end, "knock"});
    prev_end = end;
  }
  return out;
}

/// Adds one broadband noise burst of the given length with 10 ms cosine
/// ramps, peak at `peak_to_rms` times the background RMS.
inline LabeledClip inject_transient(const AudioClip& clip, double start_s, double duration_s,
                                    std::uint64_t seed, double peak_to_rms = 4.0) {
  const int sr = clip.sample_rate;
  const auto s0 = static_cast<std::size_t>(std::llround(start_s * sr));
  const auto len = static_cast<std::size_t>(std::llround(duration_s * sr));
  if (s0 + len > clip.samples.size() || len < 2) {
    fail(ErrorCode::kClipTooShort, "transient does not fit inside the clip");
  }
  LabeledClip out;
  out.clip = clip;
  out.seed = seed;
  Rng rng(seed);
  std::vector<double> burst(len);
  for (double& v : burst) v = rng.normal();
  const auto ramp = std::min<std::size_t>(len / 2, static_cast<std::size_t>(0.010 * sr));
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) / ramp);
    burst[i] *= g;
    burst[len - 1 - i] *= g;
  }
  peak_normalize(burst, peak_to_rms * rms(clip.samples));
  for (std::size_t i = 0; i < len; ++i) {
    double& v = out.clip.samples[s0 + i];
    v = std::clamp(v + burst[i], -1.0, 1.0);
  }
  out.intervals.push_back({static_cast<double>(s0) / sr, static_cast<double>(s0 + len) / sr,
                           "transient"});
  return out;
}

/// 1 where a frame's time span [origin, origin + frame_size) * hop / sr
/// overlaps any interval by a positive amount.
inline std::vector<int> frame_labels(std::span<const AnomalyInterval> intervals,
                                     const FrameTensor& frames) {
  std::vector<int> labels(frames.num_frames, 0);
  const double col_s = static_cast<double>(frames.hop_length) / frames.sample_rate;
  for (std::size_t f = 0; f < frames.num_frames; ++f) {
    const double a = static_cast<double>(frames.origin_columns[f]) * col_s;
    const double b = static_cast<double>(frames.origin_columns[f] + frames.frame_size) * col_s;
    for (const auto& iv : intervals) {
      if (std::max(a, iv.start_s) < std::min(b, iv.end_s)) {
        labels[f] = 1;
        break;
      }
    }
  }
  return labels;
}

// Labels file: "start_s<TAB>end_s<TAB>kind" per line, seconds to 6 places.
inline void save_labels(const std::filesystem::path& path,
                        std::span<const AnomalyInterval> intervals) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  char buf[64];
  for (const auto& iv : intervals) {
    std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t", iv.start_s, iv.end_s);
    out << buf << iv.kind << '\n';
  }
}

inline std::vector<AnomalyInterval> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<AnomalyInterval> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    AnomalyInterval iv;
    if (!(ls >> iv.start_s >> iv.end_s)) {
      fail(ErrorCode::kInvalidArgument,
           path.string() + ":" + std::to_string(line_no) + ": malformed interval");
    }
    if (!(ls >> iv.kind)) iv.kind = "knock";
    if (!(iv.start_s >= 0.0 && iv.start_s < iv.end_s)) {
      fail(ErrorCode::kInvalidArgument,
           path.string() + ":" + std::to_string(line_no) + ": interval must have start < end");
    }
    out.push_back(std::move(iv));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  return out;
}

}  // namespace aad
