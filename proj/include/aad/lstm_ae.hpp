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
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aad/common.hpp"
#include "aad/detector_api.hpp"
#include "aad/features.hpp"

namespace aad {

/// Single-layer LSTM encoder/decoder with a linear output projection.
/// Gate rows are stacked in the order input, forget, output, candidate.
/// Encoder weights act on [x_t; h_{t-1}], decoder weights on [z; h_{t-1}]
/// where z is the final encoder hidden state fed at every decoder step.
struct LstmAeParams {
  Eigen::MatrixXd enc_w;   // [4H x (D + H)]
  Eigen::VectorXd enc_b;   // [4H]
  Eigen::MatrixXd dec_w;   // [4H x 2H]
  Eigen::VectorXd dec_b;   // [4H]
  Eigen::MatrixXd proj_w;  // [D x H]
  Eigen::VectorXd proj_b;  // [D]

  static LstmAeParams zeros(Eigen::Index d, Eigen::Index h) {
    LstmAeParams p;
    p.enc_w = Eigen::MatrixXd::Zero(4 * h, d + h);
    p.enc_b = Eigen::VectorXd::Zero(4 * h);
    p.dec_w = Eigen::MatrixXd::Zero(4 * h, 2 * h);
    p.dec_b = Eigen::VectorXd::Zero(4 * h);
    p.proj_w = Eigen::MatrixXd::Zero(d, h);
    p.proj_b = Eigen::VectorXd::Zero(d);
    return p;
  }

  // Visits matching tensors of several parameter sets in a fixed order.
  template <typename Fn, typename... Rest>
  static void zip(Fn&& fn, LstmAeParams& a, Rest&... rest) {
    fn(a.enc_w, rest.enc_w...);
    fn(a.enc_b, rest.enc_b...);
    fn(a.dec_w, rest.dec_w...);
    fn(a.dec_b, rest.dec_b...);
    fn(a.proj_w, rest.proj_w...);
    fn(a.proj_b, rest.proj_b...);
  }

  bool all_finite() const {
    return enc_w.allFinite() && enc_b.allFinite() && dec_w.allFinite() && dec_b.allFinite() &&
           proj_w.allFinite() && proj_b.allFinite();
  }

  bool operator==(const LstmAeParams& o) const {
    return enc_w == o.enc_w && enc_b == o.enc_b && dec_w == o.dec_w && dec_b == o.dec_b &&
           proj_w == o.proj_w && proj_b == o.proj_b;
  }
};

struct LstmAeTrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct LstmAeModel {
  Eigen::Index n_mels = 128;
  Eigen::Index hidden = 64;
  LstmAeParams params;
  LstmAeTrainConfig train_config;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // [0] untrained, then one per epoch
  bool non_finite_abort = false;
};

inline LstmAeModel lstm_ae_init(Eigen::Index n_mels = 128, Eigen::Index hidden = 64,
                                std::uint64_t seed = 0) {
  if (n_mels < 1 || hidden < 1) fail(ErrorCode::kInvalidArgument, "dims must be positive");
  LstmAeModel m;
  m.n_mels = n_mels;
  m.hidden = hidden;
  m.params = LstmAeParams::zeros(n_mels, hidden);
  m.train_config.seed = seed;
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto fill = [&](Eigen::MatrixXd& w) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  };
  fill(m.params.enc_w);
  fill(m.params.dec_w);
  fill(m.params.proj_w);
  m.params.enc_b.segment(hidden, hidden).setOnes();
  m.params.dec_b.segment(hidden, hidden).setOnes();
  return m;
}

/// Batch of frames as a [D x (T * B)] matrix; column t * B + j holds time
/// step t of frame j.
inline Eigen::MatrixXd gather_batch(const FrameTensor& frames, std::span<const std::size_t> idx) {
  const auto d = static_cast<Eigen::Index>(frames.n_mels);
  const auto t_len = frames.frame_size;
  const auto b = idx.size();
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(t_len * b));
  for (std::size_t j = 0; j < b; ++j) {
    const auto f = frames.frame(idx[j]);
    for (std::size_t t = 0; t < t_len; ++t) {
      const auto col = static_cast<Eigen::Index>(t * b + j);
      for (Eigen::Index m = 0; m < d; ++m) x(m, col) = f[m * t_len + t];
    }
  }
  return x;
}

struct ReconstructionBatch {
  Eigen::MatrixXd inputs;           // [D x (T * B)], layout as gather_batch
  Eigen::MatrixXd reconstructions;  // same shape
  Eigen::VectorXd mse;              // [B]
  Eigen::Index steps = 0;
  Eigen::Index batch = 0;
};

namespace lstm_detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Per-step activations of one LSTM layer over a batch.
struct LayerTrace {
  std::vector<Eigen::MatrixXd> gates;  // [4H x B] post-activation, per step
  std::vector<Eigen::MatrixXd> c;      // [H x B] per step
  std::vector<Eigen::MatrixXd> h;      // [H x B] per step
};

// Runs T steps given precomputed input contributions (W_x x_t + b) per step.
// `input_at(t)` returns a [4H x B] expression.
template <typename InputAt>
LayerTrace run_layer(const Eigen::Ref<const Eigen::MatrixXd>& w_h, Eigen::Index hidden,
                     Eigen::Index batch, Eigen::Index steps, InputAt&& input_at) {
  LayerTrace tr;
  tr.gates.resize(steps);
  tr.c.resize(steps);
  tr.h.resize(steps);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(hidden, batch);
  const Eigen::Index H = hidden;
  for (Eigen::Index t = 0; t < steps; ++t) {
    Eigen::MatrixXd z = input_at(t);
    z.noalias() += w_h * h;
    z.topRows(3 * H) = z.topRows(3 * H).unaryExpr([](double v) { return sigmoid(v); });
    z.bottomRows(H) = z.bottomRows(H).array().tanh();
    c = z.middleRows(H, H).cwiseProduct(c) + z.topRows(H).cwiseProduct(z.bottomRows(H));
    h = z.middleRows(2 * H, H).cwiseProduct(c.array().tanh().matrix());
    tr.gates[t] = std::move(z);
    tr.c[t] = c;
    tr.h[t] = h;
  }
  return tr;
}

struct ForwardTrace {
  LayerTrace enc;
  LayerTrace dec;
  Eigen::MatrixXd latent;    // [H x B]
  Eigen::MatrixXd dec_h_all; // [H x (T * B)]
  Eigen::MatrixXd y;         // [D x (T * B)]
};

inline ForwardTrace forward(const LstmAeParams& p, Eigen::Index hidden,
                            const Eigen::MatrixXd& x, Eigen::Index steps) {
  const Eigen::Index d = p.proj_w.rows();
  const Eigen::Index batch = x.cols() / steps;
  ForwardTrace tr;

  Eigen::MatrixXd enc_in = p.enc_w.leftCols(d) * x;
  enc_in.colwise() += p.enc_b;
  tr.enc = run_layer(p.enc_w.rightCols(hidden), hidden, batch, steps,
                     [&](Eigen::Index t) { return enc_in.middleCols(t * batch, batch); });
  tr.latent = tr.enc.h.back();

  Eigen::MatrixXd dec_in = p.dec_w.leftCols(hidden) * tr.latent;
  dec_in.colwise() += p.dec_b;
  tr.dec = run_layer(p.dec_w.rightCols(hidden), hidden, batch, steps,
                     [&](Eigen::Index) -> const Eigen::MatrixXd& { return dec_in; });

  tr.dec_h_all.resize(hidden, steps * batch);
  for (Eigen::Index t = 0; t < steps; ++t) tr.dec_h_all.middleCols(t * batch, batch) = tr.dec.h[t];
  tr.y = p.proj_w * tr.dec_h_all;
  tr.y.colwise() += p.proj_b;
  return tr;
}

// Backpropagates through one layer. d_h_out[t] is the loss gradient w.r.t.
// h_t arriving from above (may be empty for "none"); d_h_final is added to
// the last step. Returns dZ per step (pre-activation gate gradients).
inline std::vector<Eigen::MatrixXd> backward_layer(const LayerTrace& tr,
                                                   const Eigen::Ref<const Eigen::MatrixXd>& w_h,
                                                   const std::vector<Eigen::MatrixXd>* d_h_out,
                                                   const Eigen::MatrixXd* d_h_final,
                                                   Eigen::MatrixXd& d_w_h) {
  const Eigen::Index steps = static_cast<Eigen::Index>(tr.h.size());
  const Eigen::Index H = tr.h[0].rows();
  const Eigen::Index B = tr.h[0].cols();
  std::vector<Eigen::MatrixXd> dz_all(steps);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto& g = tr.gates[t];
    const auto i = g.topRows(H).array();
    const auto f = g.middleRows(H, H).array();
    const auto o = g.middleRows(2 * H, H).array();
    const auto cand = g.bottomRows(H).array();
    const Eigen::ArrayXXd tanh_c = tr.c[t].array().tanh();

    Eigen::ArrayXXd dh = dh_next.array();
    if (d_h_out) dh += (*d_h_out)[t].array();
    if (d_h_final && t == steps - 1) dh += d_h_final->array();

    const Eigen::ArrayXXd dc = dh * o * (1.0 - tanh_c.square()) + dc_next.array();
    Eigen::MatrixXd dz(4 * H, B);
    const Eigen::ArrayXXd c_prev =
        t > 0 ? Eigen::ArrayXXd(tr.c[t - 1].array()) : Eigen::ArrayXXd::Zero(H, B);
    dz.topRows(H) = (dc * cand * i * (1.0 - i)).matrix();
    dz.middleRows(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.middleRows(2 * H, H) = (dh * tanh_c * o * (1.0 - o)).matrix();
    dz.bottomRows(H) = (dc * i * (1.0 - cand.square())).matrix();

    if (t > 0) d_w_h.noalias() += dz * tr.h[t - 1].transpose();
    dc_next = (dc * f).matrix();
    dh_next.noalias() = w_h.transpose() * dz;
    dz_all[t] = std::move(dz);
  }
  return dz_all;
}

}  // namespace lstm_detail

inline void check_frame_shape(const LstmAeModel& model, const FrameTensor& frames) {
  if (static_cast<Eigen::Index>(frames.n_mels) != model.n_mels) {
    fail(ErrorCode::kShapeMismatch, "frames have " + std::to_string(frames.n_mels) +
                                        " Mel bands, model expects " +
                                        std::to_string(model.n_mels));
  }
  if (frames.frame_size == 0) fail(ErrorCode::kShapeMismatch, "frames have zero length");
}

/// Reconstruction of a gathered batch (see gather_batch) spanning `steps`
/// time steps, with per-frame MSE over all steps and bands.
inline ReconstructionBatch lstm_ae_forward(const LstmAeModel& model, const Eigen::MatrixXd& x,
                                           Eigen::Index steps) {
  if (x.rows() != model.n_mels || steps < 1 || x.cols() % steps != 0) {
    fail(ErrorCode::kShapeMismatch, "batch shape does not match the model");
  }
  const auto tr = lstm_detail::forward(model.params, model.hidden, x, steps);
  ReconstructionBatch rb;
  rb.steps = steps;
  rb.batch = x.cols() / steps;
  rb.inputs = x;
  rb.reconstructions = tr.y;
  const Eigen::RowVectorXd col_sq = (tr.y - x).colwise().squaredNorm();
  rb.mse = Eigen::VectorXd::Zero(rb.batch);
  for (Eigen::Index t = 0; t < steps; ++t) {
    rb.mse += col_sq.segment(t * rb.batch, rb.batch).transpose();
  }
  rb.mse /= static_cast<double>(steps * model.n_mels);
  return rb;
}

inline ReconstructionBatch lstm_ae_forward(const LstmAeModel& model, const FrameTensor& frames,
                                           std::span<const std::size_t> idx) {
  check_frame_shape(model, frames);
  return lstm_ae_forward(model, gather_batch(frames, idx),
                         static_cast<Eigen::Index>(frames.frame_size));
}

/// Mean per-frame MSE of the batch and its gradient w.r.t. every parameter.
inline double lstm_ae_loss_and_grad(const LstmAeParams& p, Eigen::Index hidden,
                                    const Eigen::MatrixXd& x, Eigen::Index steps,
                                    LstmAeParams& grad) {
  using namespace lstm_detail;
  const Eigen::Index d = p.proj_w.rows();
  const Eigen::Index H = hidden;
  const Eigen::Index B = x.cols() / steps;
  const auto tr = forward(p, hidden, x, steps);

  const Eigen::MatrixXd diff = tr.y - x;
  const double scale = 1.0 / static_cast<double>(steps * d * B);
  const double loss = diff.squaredNorm() * scale;
  const Eigen::MatrixXd dy = (2.0 * scale) * diff;

  grad = LstmAeParams::zeros(d, H);
  grad.proj_w.noalias() = dy * tr.dec_h_all.transpose();
  grad.proj_b = dy.rowwise().sum();
  const Eigen::MatrixXd dh_all = p.proj_w.transpose() * dy;
  std::vector<Eigen::MatrixXd> dh_dec(steps);
  for (Eigen::Index t = 0; t < steps; ++t) dh_dec[t] = dh_all.middleCols(t * B, B);

  Eigen::MatrixXd d_dec_wh = Eigen::MatrixXd::Zero(4 * H, H);
  const auto dz_dec = backward_layer(tr.dec, p.dec_w.rightCols(H), &dh_dec, nullptr, d_dec_wh);
  Eigen::MatrixXd dz_dec_sum = Eigen::MatrixXd::Zero(4 * H, B);
  for (const auto& dz : dz_dec) dz_dec_sum += dz;
  grad.dec_w.leftCols(H).noalias() = dz_dec_sum * tr.latent.transpose();
  grad.dec_w.rightCols(H) = d_dec_wh;
  grad.dec_b = dz_dec_sum.rowwise().sum();
  const Eigen::MatrixXd d_latent = p.dec_w.leftCols(H).transpose() * dz_dec_sum;

  Eigen::MatrixXd d_enc_wh = Eigen::MatrixXd::Zero(4 * H, H);
  const auto dz_enc = backward_layer(tr.enc, p.enc_w.rightCols(H), nullptr, &d_latent, d_enc_wh);
  Eigen::MatrixXd dz_enc_all(4 * H, steps * B);
  for (Eigen::Index t = 0; t < steps; ++t) dz_enc_all.middleCols(t * B, B) = dz_enc[t];
  grad.enc_w.leftCols(d).noalias() = dz_enc_all * x.transpose();
  grad.enc_w.rightCols(H) = d_enc_wh;
  grad.enc_b = dz_enc_all.rowwise().sum();
  return loss;
}

/// Per-frame reconstruction MSE, evaluated in fixed-size chunks.
inline AnomalyScoreSeries lstm_ae_score(const LstmAeModel& model, const FrameTensor& frames,
                                        std::size_t chunk = 256) {
  check_frame_shape(model, frames);
  AnomalyScoreSeries out;
  out.origins = frames.origin_columns;
  out.scores.resize(frames.num_frames);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < frames.num_frames; start += chunk) {
    const std::size_t end = std::min(frames.num_frames, start + chunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto rb = lstm_ae_forward(model, frames, idx);
    for (std::size_t j = 0; j < idx.size(); ++j) out.scores[start + j] = rb.mse(j);
  }
  return out;
}

inline double lstm_ae_mean_loss(const LstmAeModel& model, const FrameTensor& frames) {
  const auto s = lstm_ae_score(model, frames);
  double acc = 0.0;
  for (double v : s.scores) acc += v;
  return acc / static_cast<double>(s.scores.size());
}

/// Adam on mean reconstruction MSE with per-epoch seeded shuffling. Stops
/// early, keeping the last finite parameters, if a batch loss is not finite.
inline LstmAeModel lstm_ae_train(LstmAeModel model, const FrameTensor& frames,
                                 const LstmAeTrainConfig& cfg) {
  check_frame_shape(model, frames);
  if (frames.num_frames == 0) fail(ErrorCode::kEmptyInput, "no training frames");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "invalid LSTM-AE training configuration");
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const auto steps = static_cast<Eigen::Index>(frames.frame_size);
  const Eigen::Index d = model.n_mels, H = model.hidden;

  model.train_config = cfg;
  model.loss_history.assign(1, lstm_ae_mean_loss(model, frames));
  model.non_finite_abort = false;

  LstmAeParams m1 = LstmAeParams::zeros(d, H);
  LstmAeParams m2 = LstmAeParams::zeros(d, H);
  LstmAeParams grad;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(frames.num_frames);
  std::iota(order.begin(), order.end(), std::size_t{0});
  long long step = 0;

  for (int epoch = 0; epoch < cfg.epochs && !model.non_finite_abort; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Eigen::MatrixXd x = gather_batch(frames, idx);
      const double loss = lstm_ae_loss_and_grad(model.params, H, x, steps, grad);
      if (!std::isfinite(loss) || !grad.all_finite()) {
        model.non_finite_abort = true;
        break;
      }
      epoch_loss += loss * static_cast<double>(idx.size());

      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      const double lr = cfg.learning_rate;
      LstmAeParams next = model.params;
      LstmAeParams::zip(
          [&](auto& p, auto& g, auto& a, auto& b) {
            a = kBeta1 * a + (1.0 - kBeta1) * g;
            b = kBeta2 * b + (1.0 - kBeta2) * g.cwiseAbs2();
            p.array() -= lr * (a.array() / c1) / ((b.array() / c2).sqrt() + kEps);
          },
          next, grad, m1, m2);
      if (!next.all_finite()) {
        model.non_finite_abort = true;
        break;
      }
      model.params = std::move(next);
    }
    if (!model.non_finite_abort) {
      model.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
  }
  model.final_loss = model.loss_history.back();
  return model;
}

inline void write_params(ParamWriter& w, const LstmAeModel& m) {
  const Eigen::Index H = m.hidden;
  w.scalar(static_cast<double>(m.n_mels));
  w.scalar(static_cast<double>(H));
  auto layer = [&](const Eigen::MatrixXd& wm, const Eigen::VectorXd& b) {
    for (Eigen::Index gate = 0; gate < 4; ++gate) {
      w.block(wm.middleRows(gate * H, H));
      w.block(b.segment(gate * H, H));
    }
  };
  layer(m.params.enc_w, m.params.enc_b);
  layer(m.params.dec_w, m.params.dec_b);
  w.block(m.params.proj_w);
  w.block(m.params.proj_b);
  w.scalar(m.train_config.epochs);
  w.scalar(m.train_config.batch_size);
  w.scalar(m.train_config.learning_rate);
  w.scalar(m.final_loss);
}

inline LstmAeModel read_lstm_ae_params(ParamReader& r) {
  LstmAeModel m;
  m.n_mels = r.count(1e6);
  m.hidden = r.count(1e6);
  const Eigen::Index H = m.hidden;
  m.params = LstmAeParams::zeros(m.n_mels, H);
  auto layer = [&](Eigen::MatrixXd& wm, Eigen::VectorXd& b) {
    for (Eigen::Index gate = 0; gate < 4; ++gate) {
      Eigen::MatrixXd wg(H, wm.cols());
      Eigen::VectorXd bg(H);
      r.block(wg);
      r.block(bg);
      wm.middleRows(gate * H, H) = wg;
      b.segment(gate * H, H) = bg;
    }
  };
  layer(m.params.enc_w, m.params.enc_b);
  layer(m.params.dec_w, m.params.dec_b);
  r.block(m.params.proj_w);
  r.block(m.params.proj_b);
  m.train_config.epochs = static_cast<int>(r.scalar());
  m.train_config.batch_size = static_cast<int>(r.scalar());
  m.train_config.learning_rate = r.scalar();
  m.final_loss = r.scalar();
  return m;
}

}  // namespace aad
