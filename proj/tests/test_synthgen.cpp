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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "aad/features.hpp"
#include "aad/synthgen.hpp"

namespace aad {
namespace {

double band_energy(const AudioClip& clip, std::size_t begin, std::size_t len, double lo_hz,
                   double hi_hz) {
  AudioClip seg{{clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                 clip.samples.begin() + static_cast<std::ptrdiff_t>(begin + len)},
                clip.sample_rate};
  const auto a = fft_amplitude_spectrum(seg);
  double e = 0.0;
  for (std::size_t k = 0; k < a.amplitudes.size(); ++k) {
    if (a.frequencies[k] > lo_hz && a.frequencies[k] <= hi_hz) e += a.amplitudes[k] * a.amplitudes[k];
  }
  return e;
}

TEST(GenNormal, LengthAndDeterminism) {
  const auto a = gen_normal(10.0, 16000, 3);
  EXPECT_EQ(a.samples.size(), 160000u);
  EXPECT_EQ(a.sample_rate, 16000);
  EXPECT_EQ(gen_normal(10.0, 16000, 3).samples, a.samples);
  EXPECT_NE(gen_normal(10.0, 16000, 4).samples, a.samples);
  double peak = 0.0;
  for (double v : a.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 0.5, 1e-12);
  EXPECT_THROW(gen_normal(0.5, 16000, 1), Error);
}

TEST(GenNormal, SharedMachineSeedSharesTheRecipe) {
  // Same machine, different realization: same spectral peaks.
  const auto a = gen_normal(4.0, 16000, 1, 77);
  const auto b = gen_normal(4.0, 16000, 2, 77);
  EXPECT_NE(a.samples, b.samples);
  const auto sa = fft_amplitude_spectrum(a), sb = fft_amplitude_spectrum(b);
  auto peak_bin = [](const AmplitudeSpectrum& s) {
    return std::max_element(s.amplitudes.begin(), s.amplitudes.end()) - s.amplitudes.begin();
  };
  EXPECT_EQ(peak_bin(sa), peak_bin(sb));
}

TEST(GenNormal, EnergyStaysBelowTwoKilohertz) {
  for (std::uint64_t seed : {1u, 2u, 42u, 1000u}) {
    const auto clip = gen_normal(10.0, 16000, seed);
    const auto a = fft_amplitude_spectrum(clip);
    double hi = 0.0, total = 0.0;
    for (std::size_t k = 0; k < a.amplitudes.size(); ++k) {
      const double e = a.amplitudes[k] * a.amplitudes[k];
      total += e;
      if (a.frequencies[k] > 2000.0) hi += e;
    }
    EXPECT_LT(hi / total, 0.05) << "seed " << seed;
  }
}

TEST(InjectKnocks, PoissonCountBand) {
  const auto bg = gen_normal(60.0, 16000, 5);
  int inside = 0;
  const int trials = 200;
  for (int seed = 0; seed < trials; ++seed) {
    const auto lc = inject_knocks(bg, 12.0, static_cast<std::uint64_t>(seed));
    const auto n = lc.intervals.size();
    if (n >= 4 && n <= 22) ++inside;
    double prev_end = 0.0;
    for (const auto& iv : lc.intervals) {
      EXPECT_GE(iv.start_s, prev_end);
      EXPECT_LT(iv.start_s, iv.end_s);
      EXPECT_LE(iv.end_s, 60.0);
      EXPECT_GE(iv.end_s - iv.start_s, 0.030 - 1e-9);
      EXPECT_LE(iv.end_s - iv.start_s, 0.080 + 1e-9);
      EXPECT_EQ(iv.kind, "knock");
      prev_end = iv.end_s;
    }
  }
  EXPECT_GE(inside, 0.95 * trials);
}

TEST(InjectKnocks, HighBandRisesBySixDecibels) {
  const auto bg = gen_normal(60.0, 16000, 6);
  const auto lc = inject_knocks(bg, 12.0, 7);
  ASSERT_FALSE(lc.intervals.empty());
  const int sr = 16000;
  double prev_end = 0.0;
  int checked = 0;
  for (const auto& iv : lc.intervals) {
    const auto s0 = static_cast<std::size_t>(std::llround(iv.start_s * sr));
    const auto len = static_cast<std::size_t>(std::llround((iv.end_s - iv.start_s) * sr));
    // The window just before the knock, if it is knock-free.
    if (iv.start_s - (iv.end_s - iv.start_s) >= prev_end) {
      const double knock = band_energy(lc.clip, s0, len, 2000.0, 8000.0);
      const double normal = band_energy(lc.clip, s0 - len, len, 2000.0, 8000.0);
      EXPECT_GT(10.0 * std::log10(knock / normal), 6.0);
      ++checked;
    }
    prev_end = iv.end_s;
  }
  EXPECT_GT(checked, 0);
}

TEST(InjectKnocks, Errors) {
  const auto bg = gen_normal(2.0, 16000, 1);
  try {
    inject_knocks(bg, 12.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kClipTooShort);
  }
}

TEST(InjectTransient, PlacesOneInterval) {
  const auto bg = gen_normal(20.0, 16000, 1);
  const auto lc = inject_transient(bg, 7.0, 5.0, 3);
  ASSERT_EQ(lc.intervals.size(), 1u);
  EXPECT_DOUBLE_EQ(lc.intervals[0].start_s, 7.0);
  EXPECT_DOUBLE_EQ(lc.intervals[0].end_s, 12.0);
  EXPECT_EQ(lc.intervals[0].kind, "transient");
  for (std::size_t i = 0; i < 7 * 16000; ++i) ASSERT_EQ(lc.clip.samples[i], bg.samples[i]);
  EXPECT_THROW(inject_transient(bg, 18.0, 5.0, 3), Error);
}

FrameTensor framing(std::size_t n, std::size_t frame, std::size_t hop) {
  FrameTensor ft;
  ft.num_frames = n;
  ft.frame_size = frame;
  ft.hop_size = hop;
  ft.sample_rate = 16000;
  ft.hop_length = 512;
  for (std::size_t i = 0; i < n; ++i) ft.origin_columns.push_back(i * hop);
  return ft;
}

TEST(FrameLabels, Examples) {
  const auto ft = framing(10, 16, 3);
  EXPECT_EQ(frame_labels({}, ft), std::vector<int>(10, 0));
  const std::vector<AnomalyInterval> all{{0.0, 100.0, "x"}};
  EXPECT_EQ(frame_labels(all, ft), std::vector<int>(10, 1));
  // Touching a frame boundary is not an overlap.
  const double col = 512.0 / 16000.0;
  const std::vector<AnomalyInterval> edge{{16 * col, 17 * col, "x"}};
  const auto l = frame_labels(edge, ft);
  EXPECT_EQ(l[0], 0);
  EXPECT_EQ(l[1], 1);
}

TEST(FrameLabels, MatchesOverlapOracle) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ft = framing(1 + rng.below(60), 1 + rng.below(20), 1 + rng.below(5));
    std::vector<AnomalyInterval> iv;
    double t = 0.0;
    for (int i = 0; i < 5; ++i) {
      t += rng.uniform(0.0, 2.0);
      const double e = t + rng.uniform(0.001, 0.3);
      iv.push_back({t, e, "knock"});
      t = e;
    }
    const auto labels = frame_labels(iv, ft);
    const double col = 512.0 / 16000.0;
    for (std::size_t f = 0; f < ft.num_frames; ++f) {
      const double a = ft.origin_columns[f] * col;
      const double b = (ft.origin_columns[f] + ft.frame_size) * col;
      int expect = 0;
      for (const auto& x : iv) expect |= (x.start_s < b && a < x.end_s) ? 1 : 0;
      EXPECT_EQ(labels[f], expect);
    }
  }
}

TEST(Labels, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "aad_labels.txt";
  const std::vector<AnomalyInterval> iv{{1.25, 1.3125, "knock"}, {4.0, 9.0, "transient"}};
  save_labels(path, iv);
  const auto back = load_labels(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].start_s, 1.25);
  EXPECT_EQ(back[1].end_s, 9.0);
  EXPECT_EQ(back[1].kind, "transient");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace aad
