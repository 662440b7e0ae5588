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
#include <vector>

#include <Eigen/Dense>

#include "aad/common.hpp"
#include "aad/detector_api.hpp"

namespace aad {

struct KMeansConfig {
  int k = 8;
  int max_iter = 300;
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

struct KMeansModel {
  RowMatrix centroids;  // [k x d]
  double inertia = 0.0;
  int iterations_run = 0;
  std::uint64_t seed = 0;
  std::vector<double> inertia_history;  // one entry per assignment step
  bool degenerate = false;              // fewer distinct points than k

  Eigen::Index k() const { return centroids.rows(); }
  Eigen::Index dim() const { return centroids.cols(); }
};

namespace kmeans_detail {

inline double squared_distance(const RowMatrix& a, Eigen::Index i, const RowMatrix& b,
                               Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

}  // namespace kmeans_detail

/// k-means++ seeding: first centre uniform, each further centre drawn with
/// probability proportional to squared distance from the nearest chosen one.
/// When every remaining point coincides with a chosen centre the last centre
/// is duplicated and `degenerate` is set.
inline RowMatrix kmeans_plus_plus(const RowMatrix& x, int k, Rng& rng, bool* degenerate = nullptr) {
  const Eigen::Index n = x.rows();
  RowMatrix centers(k, x.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  if (degenerate) *degenerate = false;
  for (int c = 0; c < k; ++c) {
    centers.row(c) = x.row(pick);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(i) - centers.row(c)).squaredNorm());
      total += d2[i];
    }
    if (c + 1 == k) break;
    if (!(total > 0.0)) {
      if (degenerate) *degenerate = true;
      continue;  // pick unchanged: duplicate the centre
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centers;
}

/// Lloyd iterations from the given centres. Stops once the largest centre
/// displacement drops below tol or after max_iter assignment steps. An empty
/// cluster is re-seeded at the point farthest from its assigned centre.
inline KMeansModel lloyd(const RowMatrix& x, RowMatrix centers, int max_iter, double tol) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  KMeansModel m;

  for (int iter = 0; iter < max_iter; ++iter) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }
    m.inertia_history.push_back(inertia);
    m.inertia = inertia;
    m.iterations_run = iter + 1;

    RowMatrix next = RowMatrix::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(assign[i]) += x.row(i);
      ++counts[assign[i]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next.row(c) /= static_cast<double>(counts[c]);
        continue;
      }
      const auto far = static_cast<Eigen::Index>(
          std::max_element(dist.begin(), dist.end()) - dist.begin());
      next.row(c) = x.row(far);
      dist[far] = 0.0;
    }

    double shift = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      shift = std::max(shift, (next.row(c) - centers.row(c)).norm());
    }
    centers = std::move(next);
    if (shift < tol) break;
  }
  m.centroids = std::move(centers);
  return m;
}

inline KMeansModel kmeans_fit(const FeatureMatrix& x, const KMeansConfig& cfg = {}) {
  if (cfg.k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (x.rows.rows() < cfg.k) {
    fail(ErrorCode::kTooFewSamples, std::to_string(x.rows.rows()) + " rows < k = " +
                                        std::to_string(cfg.k));
  }
  Rng rng(cfg.seed);
  bool degenerate = false;
  RowMatrix init = kmeans_plus_plus(x.rows, cfg.k, rng, &degenerate);
  KMeansModel m = lloyd(x.rows, std::move(init), cfg.max_iter, cfg.tol);
  m.seed = cfg.seed;
  m.degenerate = degenerate;
  return m;
}

/// Distance to the nearest centroid.
inline AnomalyScoreSeries kmeans_score(const KMeansModel& model, const FeatureMatrix& x) {
  if (x.dim() != model.dim()) {
    fail(ErrorCode::kDimensionMismatch, "feature width " + std::to_string(x.dim()) +
                                            " != model width " + std::to_string(model.dim()));
  }
  AnomalyScoreSeries out;
  out.origins = x.origins;
  out.scores.resize(static_cast<std::size_t>(x.rows.rows()));
  for (Eigen::Index i = 0; i < x.rows.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < model.k(); ++c) {
      best = std::min(best, (x.rows.row(i) - model.centroids.row(c)).squaredNorm());
    }
    out.scores[i] = std::sqrt(best);
  }
  return out;
}

inline void write_params(ParamWriter& w, const KMeansModel& m) {
  w.scalar(static_cast<double>(m.k()));
  w.scalar(static_cast<double>(m.dim()));
  w.block(m.centroids);
  w.scalar(m.inertia);
  w.scalar(m.iterations_run);
}

inline KMeansModel read_kmeans_params(ParamReader& r) {
  KMeansModel m;
  const auto k = r.count();
  const auto d = r.count();
  m.centroids.resize(k, d);
  r.block(m.centroids);
  m.inertia = r.scalar();
  m.iterations_run = static_cast<int>(r.scalar());
  return m;
}

}  // namespace aad
