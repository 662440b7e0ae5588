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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aad/common.hpp"

namespace aad {

/// Mono signal with samples in [-1, 1] at its native rate.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::optional<std::string> source_path;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

namespace wav_detail {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace wav_detail

/// Decodes an in-memory RIFF/WAVE image. Accepts 16-bit PCM or 32-bit IEEE
/// float, mono or stereo; stereo is collapsed by the per-sample channel mean.
inline AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  using namespace wav_detail;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::kCorruptHeader, "not a RIFF/WAVE file");
  }

  std::optional<std::uint16_t> format;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = get_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        fail(ErrorCode::kCorruptHeader, "truncated fmt chunk");
      }
      const std::uint8_t* f = bytes.data() + body;
      format = get_u16(f);
      channels = get_u16(f + 2);
      rate = get_u32(f + 4);
      bits = get_u16(f + 14);
      if (*format == kFormatExtensible) {
        if (size < 40) fail(ErrorCode::kCorruptHeader, "truncated extensible fmt chunk");
        // First two bytes of the sub-format GUID carry the real format code.
        format = get_u16(f + 24);
      }
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      // Tolerate writers that leave the data size at a placeholder value.
      const std::size_t avail = bytes.size() - body;
      data = bytes.subspan(body, std::min<std::size_t>(size, avail));
      have_data = true;
      break;
    }
    pos = body + size + (size & 1u);
  }

  if (!format) fail(ErrorCode::kCorruptHeader, "missing fmt chunk");
  if (!have_data) fail(ErrorCode::kCorruptHeader, "missing data chunk");
  if (rate == 0) fail(ErrorCode::kCorruptHeader, "sample rate is zero");
  if (channels == 0) fail(ErrorCode::kCorruptHeader, "channel count is zero");
  if (channels > 2) {
    fail(ErrorCode::kUnsupportedFormat, std::to_string(channels) + " channels (max 2)");
  }
  const bool pcm16 = *format == kFormatPcm && bits == 16;
  const bool float32 = *format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    fail(ErrorCode::kUnsupportedFormat, "format code " + std::to_string(*format) +
                                            " with " + std::to_string(bits) + " bits");
  }

  const std::size_t bytes_per_frame = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t n = data.size() / bytes_per_frame;
  if (n == 0) fail(ErrorCode::kEmptyAudio, "no samples in data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = data.data() + i * bytes_per_frame;
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(get_u16(p + 2 * c)) / 32768.0;
      } else {
        v = std::bit_cast<float>(get_u32(p + 4 * c));
        if (!std::isfinite(v)) fail(ErrorCode::kCorruptHeader, "non-finite float sample");
        v = std::clamp(v, -1.0, 1.0);
      }
      acc += v;
    }
    clip.samples[i] = channels == 2 ? acc / 2.0 : acc;
  }
  return clip;
}

inline AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  AudioClip clip = decode_wav(bytes);
  clip.source_path = path.string();
  return clip;
}

/// Mono RIFF/WAVE image. 16-bit encoding rounds x*32768 to nearest and
/// saturates, so decoded 16-bit clips re-encode bit-exactly.
inline std::vector<std::uint8_t> encode_wav(const AudioClip& clip,
                                            WavEncoding enc = WavEncoding::kPcm16) {
  const std::uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  auto put = [&out](std::uint32_t v, int nbytes) {
    for (int i = 0; i < nbytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto tag = [&out](const char* s) { out.insert(out.end(), s, s + 4); };
  tag("RIFF");
  put(36 + data_size, 4);
  tag("WAVE");
  tag("fmt ");
  put(16, 4);
  put(enc == WavEncoding::kPcm16 ? wav_detail::kFormatPcm : wav_detail::kFormatFloat, 2);
  put(1, 2);
  put(static_cast<std::uint32_t>(clip.sample_rate), 4);
  put(static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8), 4);
  put(bits / 8, 2);
  put(bits, 2);
  tag("data");
  put(data_size, 4);
  for (double x : clip.samples) {
    if (enc == WavEncoding::kPcm16) {
      const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      put(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)), 2);
    } else {
      put(std::bit_cast<std::uint32_t>(static_cast<float>(x)), 4);
    }
  }
  return out;
}

inline void save_wav(const std::filesystem::path& path, const AudioClip& clip,
                     WavEncoding enc = WavEncoding::kPcm16) {
  const auto bytes = encode_wav(clip, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoFailure, "short write to " + path.string());
}

inline double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  long double acc = 0.0L;
  for (double v : x) acc += static_cast<long double>(v) * v;
  return static_cast<double>(std::sqrt(acc / x.size()));
}

struct RmsNormalizeResult {
  AudioClip clip;
  double gain = 1.0;
  std::size_t clipped = 0;  // samples hard-limited to +/-1 after gain
  bool silent = false;      // input RMS below 1e-12; clip returned unchanged
};

inline RmsNormalizeResult rms_normalize(const AudioClip& clip, double target_rms) {
  if (clip.samples.empty()) fail(ErrorCode::kEmptyAudio, "rms_normalize on empty clip");
  if (!(target_rms > 0.0 && target_rms <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "target_rms must lie in (0, 1]");
  }
  RmsNormalizeResult r{clip};
  const double current = rms(clip.samples);
  if (current < 1e-12) {
    r.silent = true;
    return r;
  }
  r.gain = target_rms / current;
  for (double& v : r.clip.samples) {
    v *= r.gain;
    if (v > 1.0 || v < -1.0) {
      v = std::clamp(v, -1.0, 1.0);
      ++r.clipped;
    }
  }
  return r;
}

}  // namespace aad
