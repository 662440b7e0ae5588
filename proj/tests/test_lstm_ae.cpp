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

#include <numeric>
#include <vector>

#include "aad/lstm_ae.hpp"
#include "aad/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace aad {
namespace {

using testing::random_frames;

std::vector<std::vector<double>> frame_rows(const FrameTensor& ft, std::size_t f) {
  std::vector<std::vector<double>> x(ft.frame_size, std::vector<double>(ft.n_mels));
  for (std::size_t t = 0; t < ft.frame_size; ++t) {
    for (std::size_t m = 0; m < ft.n_mels; ++m) x[t][m] = ft.at(f, m, t);
  }
  return x;
}

LstmAeModel perturbed_model(Eigen::Index d, Eigen::Index h, std::uint64_t seed) {
  auto m = lstm_ae_init(d, h, seed);
  Rng rng(seed + 1);
  LstmAeParams::zip(
      [&](auto& p) {
        for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(-0.8, 0.8);
      },
      m.params);
  return m;
}

TEST(LstmAeInit, ShapesAndSeeds) {
  const auto m = lstm_ae_init(128, 64, 7);
  EXPECT_EQ(m.params.enc_w.rows(), 4 * 64);
  EXPECT_EQ(m.params.enc_w.cols(), 128 + 64);
  EXPECT_EQ(m.params.enc_b.size(), 4 * 64);
  EXPECT_EQ(m.params.dec_w.rows(), 4 * 64);
  EXPECT_EQ(m.params.dec_w.cols(), 2 * 64);
  EXPECT_EQ(m.params.proj_w.rows(), 128);
  EXPECT_EQ(m.params.proj_w.cols(), 64);
  EXPECT_EQ(m.params.proj_b.size(), 128);
  EXPECT_TRUE(m.params.all_finite());
  EXPECT_TRUE(lstm_ae_init(128, 64, 7).params == m.params);
  EXPECT_FALSE(lstm_ae_init(128, 64, 8).params == m.params);
  EXPECT_THROW(lstm_ae_init(0, 4), Error);
}

TEST(LstmAeForward, MatchesScalarOracle) {
  const auto m = perturbed_model(5, 3, 11);
  const auto frames = random_frames(4, 5, 4, 12);
  const auto& p = m.params;
  std::vector<std::size_t> idx(4);
  std::iota(idx.begin(), idx.end(), 0);
  const auto rb = lstm_ae_forward(m, frames, idx);
  for (std::size_t j = 0; j < 4; ++j) {
    const auto x = frame_rows(frames, j);
    const auto y = oracle::lstm_ae_reconstruct(p.enc_w, p.enc_b, p.dec_w, p.dec_b, p.proj_w,
                                               p.proj_b, x);
    double mse = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t d = 0; d < 5; ++d) {
        EXPECT_NEAR(rb.reconstructions(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t * 4 + j)),
                    y[t][d], 1e-10);
        mse += (y[t][d] - x[t][d]) * (y[t][d] - x[t][d]);
      }
    }
    EXPECT_NEAR(rb.mse(static_cast<Eigen::Index>(j)), mse / 20.0, 1e-10);
  }
}

TEST(LstmAeForward, ZeroInputGivesBiasDrivenOutput) {
  auto m = perturbed_model(6, 4, 3);
  m.params.proj_b.setZero();
  FrameTensor zero = random_frames(1, 6, 5, 1);
  std::fill(zero.data.begin(), zero.data.end(), 0.0f);
  const std::vector<std::size_t> idx{0};
  const auto rb = lstm_ae_forward(m, zero, idx);
  EXPECT_NEAR(rb.mse(0), rb.reconstructions.squaredNorm() / 30.0, 1e-15);
}

TEST(LstmAeForward, IdenticalFramesGiveIdenticalMse) {
  const auto m = perturbed_model(6, 4, 4);
  auto one = random_frames(1, 6, 5, 2);
  const std::vector<std::size_t> rep{0, 0, 0};
  const auto batch = one.subset(rep);
  const std::vector<std::size_t> idx{0, 1, 2};
  const auto rb = lstm_ae_forward(m, batch, idx);
  EXPECT_EQ(rb.mse(0), rb.mse(1));
  EXPECT_EQ(rb.mse(1), rb.mse(2));
}

TEST(LstmAeGradient, MatchesCentralDifferences) {
  const Eigen::Index d = 5, h = 3, steps = 4;
  const auto m = perturbed_model(d, h, 21);
  const auto frames = random_frames(3, d, steps, 22);
  const std::vector<std::size_t> idx{0, 1, 2};
  const Eigen::MatrixXd x = gather_batch(frames, idx);

  LstmAeParams grad;
  lstm_ae_loss_and_grad(m.params, h, x, steps, grad);

  LstmAeParams probe = m.params;
  LstmAeParams scratch;
  const double eps = 1e-5;
  double worst = 0.0;
  LstmAeParams::zip(
      [&](auto& p, auto& g) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const double keep = p.data()[i];
          p.data()[i] = keep + eps;
          const double up = lstm_ae_loss_and_grad(probe, h, x, steps, scratch);
          p.data()[i] = keep - eps;
          const double down = lstm_ae_loss_and_grad(probe, h, x, steps, scratch);
          p.data()[i] = keep;
          const double numeric = (up - down) / (2 * eps);
          const double analytic = g.data()[i];
          const double rel = std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic));
          worst = std::max(worst, rel);
        }
      },
      probe, grad);
  EXPECT_LE(worst, 1e-4);
}

TEST(LstmAeTrain, MemorizesASingleFrame) {
  RunConfig cfg;
  const auto all = extract_frames(gen_normal(5.0, 16000, 42), cfg);
  const std::vector<std::size_t> pick{0};
  const auto one = all.subset(pick);
  const auto trained =
      lstm_ae_train(lstm_ae_init(128, 64, 1), one, {.epochs = 200, .batch_size = 64, .learning_rate = 1e-3, .seed = 1});
  ASSERT_EQ(trained.loss_history.size(), 201u);
  EXPECT_LT(trained.final_loss, 1e-3);
  EXPECT_LT(lstm_ae_mean_loss(trained, one), 1e-3);
  // A frame from elsewhere in the clip reconstructs worse than the memorized one.
  const std::vector<std::size_t> other{20};
  EXPECT_GT(lstm_ae_mean_loss(trained, all.subset(other)), lstm_ae_mean_loss(trained, one));
}

TEST(LstmAeTrain, BitDeterministic) {
  const auto frames = random_frames(40, 8, 6, 5);
  const LstmAeTrainConfig cfg{.epochs = 3, .batch_size = 16, .learning_rate = 1e-2, .seed = 9};
  const auto a = lstm_ae_train(lstm_ae_init(8, 5, 9), frames, cfg);
  const auto b = lstm_ae_train(lstm_ae_init(8, 5, 9), frames, cfg);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());
}

TEST(LstmAeTrain, RejectsBadConfig) {
  const auto frames = random_frames(4, 8, 6, 5);
  EXPECT_THROW(lstm_ae_train(lstm_ae_init(8, 5), frames, {.batch_size = 0}), Error);
  EXPECT_THROW(lstm_ae_train(lstm_ae_init(9, 5), frames, {}), Error);
}

TEST(LstmAeScore, BatchedEqualsOneAtATime) {
  const auto m = perturbed_model(8, 5, 6);
  const auto frames = random_frames(37, 8, 6, 7);
  const auto batched = lstm_ae_score(m, frames, 16);
  ASSERT_EQ(batched.size(), 37u);
  for (std::size_t f = 0; f < 37; ++f) {
    const std::vector<std::size_t> idx{f};
    EXPECT_NEAR(batched.scores[f], lstm_ae_forward(m, frames, idx).mse(0), 1e-12);
  }
  const auto whole = lstm_ae_score(m, frames, 1000);
  for (std::size_t f = 0; f < 37; ++f) EXPECT_NEAR(batched.scores[f], whole.scores[f], 1e-12);
}

}  // namespace
}  // namespace aad
