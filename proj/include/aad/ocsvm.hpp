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
#include <limits>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "aad/common.hpp"
#include "aad/detector_api.hpp"

namespace aad {

struct OcSvmConfig {
  double nu = 0.1;
  std::optional<double> gamma;  // unset: "scale", 1 / (d * var(X))
  double tol = 1e-3;
  long long max_iterations = 10'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
};

struct OcSvmModel {
  RowMatrix support_vectors;  // [n_sv x d]
  Eigen::VectorXd alphas;     // 0 < alpha_i <= 1 / (nu n), sum 1
  double rho = 0.0;
  double nu = 0.1;
  double gamma = 1.0;

  // Solver diagnostics; not persisted.
  double objective = 0.0;
  double kkt_violation = 0.0;
  long long iterations = 0;
  bool converged = true;

  Eigen::Index n_sv() const { return support_vectors.rows(); }
  Eigen::Index dim() const { return support_vectors.cols(); }

  /// g(x) = sum_j alpha_j exp(-gamma |x_j - x|^2).
  template <typename Row>
  double decision_sum(const Row& x) const {
    double g = 0.0;
    for (Eigen::Index j = 0; j < n_sv(); ++j) {
      g += alphas(j) * std::exp(-gamma * (support_vectors.row(j) - x).squaredNorm());
    }
    return g;
  }
};

/// 1 / (d * var(X)) over every entry of X.
inline double scale_gamma(const RowMatrix& x) {
  const double n = static_cast<double>(x.size());
  const double mean = x.sum() / n;
  const double var = (x.array() - mean).square().sum() / n;
  return var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

namespace ocsvm_detail {

/// LRU cache of full RBF kernel rows over the training set.
class KernelRows {
 public:
  KernelRows(const RowMatrix& x, double gamma, std::size_t budget_bytes)
      : x_(x), gamma_(gamma), sq_norms_(x.rowwise().squaredNorm()) {
    const std::size_t row_bytes = static_cast<std::size_t>(x.rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, budget_bytes / std::max<std::size_t>(1, row_bytes));
  }

  const Eigen::VectorXd& row(Eigen::Index i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    Eigen::VectorXd k = x_ * x_.row(i).transpose();
    for (Eigen::Index j = 0; j < k.size(); ++j) {
      const double d2 = std::max(0.0, sq_norms_(i) + sq_norms_(j) - 2.0 * k(j));
      k(j) = std::exp(-gamma_ * d2);
    }
    k(i) = 1.0;
    lru_.emplace_front(i, std::move(k));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  const RowMatrix& x_;
  double gamma_;
  Eigen::VectorXd sq_norms_;
  std::size_t capacity_ = 2;
  std::list<std::pair<Eigen::Index, Eigen::VectorXd>> lru_;
  std::unordered_map<Eigen::Index, decltype(lru_)::iterator> index_;
};

}  // namespace ocsvm_detail

/// Dual solution before support-vector extraction, exposed for diagnostics.
struct OcSvmDual {
  Eigen::VectorXd alpha;
  Eigen::VectorXd gradient;  // (Q alpha)_i = g(x_i)
  double rho = 0.0;
  double upper = 0.0;        // box bound 1 / (nu n)
  double kkt_violation = 0.0;
  long long iterations = 0;
  bool converged = true;
};

/// SMO on  min 1/2 a'Qa  s.t.  0 <= a_i <= 1/(nu n), sum a = 1, moving mass
/// between the maximal KKT-violating pair each step.
inline OcSvmDual solve_ocsvm_dual(const RowMatrix& x, double nu, double gamma, double tol,
                                  long long max_iterations, std::size_t cache_bytes) {
  const Eigen::Index n = x.rows();
  OcSvmDual s;
  s.upper = 1.0 / (nu * static_cast<double>(n));
  const double upper = s.upper;
  s.alpha = Eigen::VectorXd::Zero(n);
  s.gradient = Eigen::VectorXd::Zero(n);

  // Feasible start: fill whole boxes in index order until the mass is 1.
  double remaining = 1.0;
  for (Eigen::Index i = 0; i < n && remaining > 0.0; ++i) {
    s.alpha(i) = std::min(upper, remaining);
    remaining -= s.alpha(i);
    if (remaining < 1e-15) remaining = 0.0;
  }

  ocsvm_detail::KernelRows kernel(x, gamma, cache_bytes);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.alpha(i) > 0.0) s.gradient += s.alpha(i) * kernel.row(i);
  }

  auto at_upper = [&](Eigen::Index i) { return s.alpha(i) >= upper; };
  auto at_lower = [&](Eigen::Index i) { return s.alpha(i) <= 0.0; };

  for (;;) {
    Eigen::Index up = -1, low = -1;
    double g_up = std::numeric_limits<double>::infinity();
    double g_low = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!at_upper(t) && s.gradient(t) < g_up) {
        g_up = s.gradient(t);
        up = t;
      }
      if (!at_lower(t) && s.gradient(t) > g_low) {
        g_low = s.gradient(t);
        low = t;
      }
    }
    s.kkt_violation = (up < 0 || low < 0) ? 0.0 : g_low - g_up;
    if (s.kkt_violation <= tol) break;
    if (s.iterations >= max_iterations) {
      s.converged = false;
      break;
    }
    ++s.iterations;

    const Eigen::VectorXd& k_up = kernel.row(up);
    const double k_ul = k_up(low);
    const Eigen::VectorXd k_up_copy = k_up;  // next row() call may evict it
    const Eigen::VectorXd& k_low = kernel.row(low);
    const double eta = std::max(2.0 - 2.0 * k_ul, 1e-12);
    double delta = (g_low - g_up) / eta;
    delta = std::min({delta, upper - s.alpha(up), s.alpha(low)});

    s.alpha(up) += delta;
    s.alpha(low) -= delta;
    if (upper - s.alpha(up) <= 1e-15 * upper) s.alpha(up) = upper;
    if (s.alpha(low) <= 1e-15 * upper) s.alpha(low) = 0.0;
    s.gradient += delta * (k_up_copy - k_low);
  }

  // rho: mean gradient over free vectors; otherwise the midpoint of the
  // feasible interval left by the bounded ones.
  double free_sum = 0.0;
  Eigen::Index n_free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (at_lower(i)) {
      ub = std::min(ub, s.gradient(i));
    } else if (at_upper(i)) {
      lb = std::max(lb, s.gradient(i));
    } else {
      free_sum += s.gradient(i);
      ++n_free;
    }
  }
  if (n_free > 0) {
    s.rho = free_sum / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    s.rho = 0.5 * (ub + lb);
  } else {
    s.rho = std::isfinite(ub) ? ub : lb;
  }
  return s;
}

inline OcSvmModel ocsvm_fit(const FeatureMatrix& x, const OcSvmConfig& cfg = {}) {
  const Eigen::Index n = x.rows.rows();
  if (n < 1) fail(ErrorCode::kTooFewSamples, "OC-SVM needs at least one training row");
  if (!(cfg.nu > 0.0 && cfg.nu <= 1.0)) {
    fail(ErrorCode::kInfeasibleNu, "nu must lie in (0, 1]");
  }
  OcSvmModel m;
  m.nu = cfg.nu;
  m.gamma = cfg.gamma ? *cfg.gamma : scale_gamma(x.rows);
  if (!(m.gamma > 0.0)) fail(ErrorCode::kInvalidArgument, "gamma must be positive");

  const OcSvmDual s =
      solve_ocsvm_dual(x.rows, m.nu, m.gamma, cfg.tol, cfg.max_iterations, cfg.cache_bytes);
  m.rho = s.rho;
  m.kkt_violation = s.kkt_violation;
  m.iterations = s.iterations;
  m.converged = s.converged;
  m.objective = 0.5 * s.alpha.dot(s.gradient);

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.alpha(i) > 0.0) sv.push_back(i);
  }
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.rows.cols());
  m.alphas.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t j = 0; j < sv.size(); ++j) {
    m.support_vectors.row(static_cast<Eigen::Index>(j)) = x.rows.row(sv[j]);
    m.alphas(static_cast<Eigen::Index>(j)) = s.alpha(sv[j]);
  }
  return m;
}

/// rho - g(x): positive outside the learned region.
inline AnomalyScoreSeries ocsvm_score(const OcSvmModel& model, const FeatureMatrix& x) {
  if (x.dim() != model.dim()) {
    fail(ErrorCode::kDimensionMismatch, "feature width " + std::to_string(x.dim()) +
                                            " != model width " + std::to_string(model.dim()));
  }
  AnomalyScoreSeries out;
  out.origins = x.origins;
  out.scores.resize(static_cast<std::size_t>(x.rows.rows()));
  for (Eigen::Index i = 0; i < x.rows.rows(); ++i) {
    out.scores[i] = model.rho - model.decision_sum(x.rows.row(i));
  }
  return out;
}

inline void write_params(ParamWriter& w, const OcSvmModel& m) {
  w.scalar(m.nu);
  w.scalar(m.gamma);
  w.scalar(m.rho);
  w.scalar(static_cast<double>(m.n_sv()));
  w.scalar(static_cast<double>(m.dim()));
  w.block(m.alphas);
  w.block(m.support_vectors);
}

inline OcSvmModel read_ocsvm_params(ParamReader& r) {
  OcSvmModel m;
  m.nu = r.scalar();
  m.gamma = r.scalar();
  m.rho = r.scalar();
  const auto n_sv = r.count();
  const auto d = r.count();
  m.alphas.resize(n_sv);
  r.block(m.alphas);
  m.support_vectors.resize(n_sv, d);
  r.block(m.support_vectors);
  return m;
}

}  // namespace aad
