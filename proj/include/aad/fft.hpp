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

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <fftw3.h>

#include "aad/common.hpp"

namespace aad {

/// Real-to-complex DFT of a fixed length, backed by an FFTW plan. Plans are
/// created with FFTW_ESTIMATE so repeated runs produce identical output.
/// Instances are not safe for concurrent use.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n == 0) fail(ErrorCode::kInvalidArgument, "FFT length must be positive");
    in_.reset(fftw_alloc_real(n));
    out_.reset(fftw_alloc_complex(n / 2 + 1));
    plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(),
                                     FFTW_ESTIMATE));
  }

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Non-negative-frequency half of the DFT: X[k] = sum_m x[m] e^{-2 pi i k m / n}.
  void forward(std::span<const double> x, std::span<std::complex<double>> out) {
    if (x.size() != n_) fail(ErrorCode::kShapeMismatch, "FFT input length mismatch");
    std::copy(x.begin(), x.end(), in_.get());
    fftw_execute(plan_.get());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {out_.get()[k][0], out_.get()[k][1]};
  }

  std::vector<std::complex<double>> forward(std::span<const double> x) {
    std::vector<std::complex<double>> out(bins());
    forward(x, out);
    return out;
  }

 private:
  struct FreeBuffer {
    void operator()(void* p) const { fftw_free(p); }
  };
  struct DestroyPlan {
    void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
  };

  std::size_t n_;
  std::unique_ptr<double, FreeBuffer> in_;
  std::unique_ptr<fftw_complex, FreeBuffer> out_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, DestroyPlan> plan_;
};

/// Inverse of RealFft: takes n/2+1 bins, returns n real samples scaled by 1/n.
class RealInverseFft {
 public:
  explicit RealInverseFft(std::size_t n) : n_(n) {
    if (n == 0) fail(ErrorCode::kInvalidArgument, "FFT length must be positive");
    in_.reset(fftw_alloc_complex(n / 2 + 1));
    out_.reset(fftw_alloc_real(n));
    plan_.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE));
  }

  std::vector<double> inverse(std::span<const std::complex<double>> bins) {
    for (std::size_t k = 0; k < n_ / 2 + 1; ++k) {
      in_.get()[k][0] = bins[k].real();
      in_.get()[k][1] = bins[k].imag();
    }
    fftw_execute(plan_.get());
    std::vector<double> out(out_.get(), out_.get() + n_);
    for (double& v : out) v /= static_cast<double>(n_);
    return out;
  }

 private:
  struct FreeBuffer {
    void operator()(void* p) const { fftw_free(p); }
  };
  struct DestroyPlan {
    void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
  };

  std::size_t n_;
  std::unique_ptr<fftw_complex, FreeBuffer> in_;
  std::unique_ptr<double, FreeBuffer> out_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, DestroyPlan> plan_;
};

/// Zero-phase brick-wall band-pass: keeps DFT bins with frequency in
/// [lo_hz, hi_hz] and discards the rest.
inline std::vector<double> band_limit(std::span<const double> x, int sample_rate, double lo_hz,
                                      double hi_hz) {
  const std::size_t n = x.size();
  RealFft fwd(n);
  auto bins = fwd.forward(x);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    if (f < lo_hz || f > hi_hz) bins[k] = 0.0;
  }
  return RealInverseFft(n).inverse(bins);
}

}  // namespace aad
