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
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <openssl/evp.h>

namespace aad {

enum class ErrorCode {
  kUsage,
  kInvalidArgument,
  kIoFailure,
  kUnsupportedFormat,
  kCorruptHeader,
  kEmptyAudio,
  kTooFewColumns,
  kShapeMismatch,
  kSignalTooShort,
  kInvalidFftSize,
  kInvalidBandRange,
  kAllZeroSpectrogram,
  kSpectrogramTooShort,
  kTooManyCoefficients,
  kStandardizerMissing,
  kVersionMismatch,
  kCorruptModelFile,
  kTooFewSamples,
  kDimensionMismatch,
  kInfeasibleNu,
  kNonFiniteLoss,
  kEmptyInput,
  kDegenerateLabels,
  kLengthMismatch,
  kSingleClassInput,
  kClipTooShort,
};

inline std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "Usage";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kTooFewColumns: return "TooFewColumns";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kInvalidFftSize: return "InvalidFftSize";
    case ErrorCode::kInvalidBandRange: return "InvalidBandRange";
    case ErrorCode::kAllZeroSpectrogram: return "AllZeroSpectrogram";
    case ErrorCode::kSpectrogramTooShort: return "SpectrogramTooShort";
    case ErrorCode::kTooManyCoefficients: return "TooManyCoefficients";
    case ErrorCode::kStandardizerMissing: return "StandardizerMissing";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptModelFile: return "CorruptModelFile";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInfeasibleNu: return "InfeasibleNu";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kClipTooShort: return "ClipTooShort";
  }
  return "Unknown";
}

// Process exit code for an error category: 2 usage, 3 data, 4 numeric.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidFftSize:
    case ErrorCode::kInvalidBandRange:
    case ErrorCode::kTooManyCoefficients:
    case ErrorCode::kInfeasibleNu:
      return 2;
    case ErrorCode::kNonFiniteLoss:
      return 4;
    default:
      return 3;
  }
}

/// Library exception. Carries a machine-readable code and, once it has
/// crossed a pipeline boundary, the name of the stage that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    Error e(code_, what());
    e.stage_ = std::move(stage);
    return e;
  }

  std::string describe() const {
    std::string out;
    if (!stage_.empty()) out += "[" + stage_ + "] ";
    out += std::string(error_name(code_)) + ": " + what();
    return out;
  }

 private:
  ErrorCode code_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// Runs fn and tags any aad::Error escaping it with the stage name.
template <typename Fn>
decltype(auto) in_stage(const std::string& stage, Fn&& fn) {
  try {
    return std::forward<Fn>(fn)();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

enum class DetectorKind : std::uint32_t { kKMeans = 1, kOcSvm = 2, kLstmAe = 3 };

inline std::string_view detector_name(DetectorKind k) {
  switch (k) {
    case DetectorKind::kKMeans: return "K-Means";
    case DetectorKind::kOcSvm: return "OC-SVM";
    case DetectorKind::kLstmAe: return "LSTM-AE";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Seeded randomness. std::mt19937_64 output is fully specified by the
// standard; the distributions below are written out so that sequences do not
// depend on the standard library vendor.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Digest.

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::string_view data) {
  Digest out{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

inline std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Little-endian binary helpers.

namespace binio {

template <typename T>
T to_little(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

template <typename T>
void write(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read(std::istream& is, T& v) {
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) return false;
  v = to_little(v);
  return true;
}

}  // namespace binio

}  // namespace aad
