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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "aad/detector.hpp"
#include "test_util.hpp"

namespace aad {
namespace {

using testing::random_frames;

DetectorSettings small_settings() {
  DetectorSettings s;
  s.kmeans.k = 4;
  s.lstm_hidden = 6;
  s.lstm.epochs = 2;
  s.lstm.batch_size = 8;
  s.seed = 5;
  return s;
}

TEST(Vectorize, FlattenShape) {
  const auto ft = random_frames(3, 128, 16, 1);
  const auto fm = vectorize(ft, Pooling::kFlatten);
  EXPECT_EQ(fm.rows.rows(), 3);
  EXPECT_EQ(fm.dim(), 2048);
  EXPECT_EQ(fm.rows(1, 16 * 5 + 7), static_cast<double>(ft.at(1, 5, 7)));
  EXPECT_EQ(fm.origins, ft.origin_columns);
}

TEST(Vectorize, MeanPoolOfConstantFrame) {
  auto ft = random_frames(2, 128, 16, 1);
  std::fill(ft.data.begin(), ft.data.end(), 0.25f);
  const auto fm = vectorize(ft, Pooling::kMeanPoolTime);
  EXPECT_EQ(fm.dim(), 128);
  for (Eigen::Index i = 0; i < fm.rows.size(); ++i) EXPECT_DOUBLE_EQ(fm.rows.data()[i], 0.25);
}

TEST(Vectorize, StandardizedColumns) {
  auto ft = random_frames(200, 4, 3, 2);
  // Make one dimension constant.
  for (std::size_t f = 0; f < ft.num_frames; ++f) ft.data[f * ft.frame_stride()] = 0.5f;
  std::optional<Standardizer> st;
  const auto fm = vectorize(ft, Pooling::kFlatten, st, true);
  ASSERT_TRUE(st.has_value());
  const Eigen::RowVectorXd mean = fm.rows.colwise().mean();
  for (Eigen::Index c = 0; c < fm.dim(); ++c) {
    const double var = (fm.rows.col(c).array() - mean(c)).square().mean();
    EXPECT_NEAR(mean(c), 0.0, 1e-9);
    if (c == 0) {
      EXPECT_EQ(fm.rows.col(0).cwiseAbs().maxCoeff(), 0.0);
    } else {
      EXPECT_NEAR(var, 1.0, 1e-6);
    }
  }
}

TEST(Vectorize, MissingStandardizer) {
  const auto ft = random_frames(3, 4, 3, 2);
  std::optional<Standardizer> none;
  try {
    vectorize(ft, Pooling::kFlatten, none, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStandardizerMissing);
  }
  Standardizer wrong = Standardizer::fit(RowMatrix::Random(5, 3));
  std::optional<Standardizer> w = wrong;
  EXPECT_THROW(vectorize(ft, Pooling::kFlatten, w, false), Error);
}

class RoundTrip : public ::testing::TestWithParam<DetectorKind> {};

TEST_P(RoundTrip, IdenticalScoresAfterRestore) {
  const auto train = random_frames(60, 8, 5, 3);
  const auto test = random_frames(25, 8, 5, 4);
  const Digest digest = sha256("config");
  const auto m = fit_detector(GetParam(), train, small_settings(), digest);
  const auto path = std::filesystem::temp_directory_path() /
                    ("aad_model_" + std::string(detector_name(GetParam())) + ".bin");
  persist(m, path);
  const auto back = restore(path);
  EXPECT_EQ(back.kind, m.kind);
  EXPECT_EQ(back.config_digest, digest);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(read_model_header(path).kind, m.kind);
  EXPECT_EQ(score_detector(back, test).scores, score_detector(m, test).scores);
  std::filesystem::remove(path);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, RoundTrip,
                         ::testing::Values(DetectorKind::kKMeans, DetectorKind::kOcSvm,
                                           DetectorKind::kLstmAe));

TEST(Persistence, LargeSeedSurvives) {
  auto s = small_settings();
  s.seed = 0xFFFFFFFFFFFFFFF1ull;
  const auto m = fit_detector(DetectorKind::kKMeans, random_frames(20, 3, 2, 1), s);
  std::stringstream ss;
  persist(m, ss);
  EXPECT_EQ(restore(ss).seed, s.seed);
}

TEST(Persistence, TruncatedFileIsCorrupt) {
  const auto m = fit_detector(DetectorKind::kOcSvm, random_frames(20, 3, 2, 1), small_settings());
  std::stringstream ss;
  persist(m, ss);
  const std::string bytes = ss.str();
  for (std::size_t cut : {std::size_t{4}, std::size_t{30}, bytes.size() / 2, bytes.size() - 1}) {
    std::stringstream part(bytes.substr(0, cut));
    try {
      restore(part);
      FAIL() << "cut " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kCorruptModelFile) << "cut " << cut;
    }
  }
}

TEST(Persistence, FutureVersionIsRejected) {
  const auto m = fit_detector(DetectorKind::kKMeans, random_frames(20, 3, 2, 1), small_settings());
  std::stringstream ss;
  persist(m, ss);
  std::string bytes = ss.str();
  bytes[8] = 2;  // version follows the 8-byte magic
  std::stringstream in(bytes);
  try {
    restore(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
}

TEST(Persistence, BadMagicAndMissingFile) {
  std::stringstream junk("NOTAMODELFILE-----------------------------------------");
  EXPECT_THROW(restore(junk), Error);
  try {
    restore(std::filesystem::path("/nonexistent/aad/model.bin"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoFailure);
  }
}

TEST(Scoring, OrderInvariant) {
  const auto train = random_frames(50, 6, 4, 8);
  const auto test = random_frames(20, 6, 4, 9);
  std::vector<std::size_t> rev(20);
  for (std::size_t i = 0; i < 20; ++i) rev[i] = 19 - i;
  const auto reversed = test.subset(rev);
  for (auto kind : {DetectorKind::kKMeans, DetectorKind::kOcSvm, DetectorKind::kLstmAe}) {
    const auto m = fit_detector(kind, train, small_settings());
    const auto a = score_detector(m, test);
    const auto b = score_detector(m, reversed);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(a.scores[i], b.scores[19 - i]);
  }
}

}  // namespace
}  // namespace aad
