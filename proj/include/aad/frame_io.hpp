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

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aad/common.hpp"
#include "aad/features.hpp"

namespace aad {

inline constexpr char kFrameMagic[8] = {'A', 'A', 'D', 'F', 'R', 'A', 'M', 'E'};
inline constexpr std::uint32_t kFrameVersion = 1;

inline std::filesystem::path frame_meta_path(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".meta");
}

inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || first == last) {
    fail(ErrorCode::kInvalidArgument, "not a number: '" + s + "'");
  }
  return v;
}

/// Reads "key = value" lines; '#' starts a comment.
inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kInvalidArgument, path.string() + ": expected 'key = value': " + line);
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

/// Binary tensor plus a "<path>.meta" text sidecar with the framing.
inline void save_frames(const std::filesystem::path& path, const FrameTensor& ft) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(kFrameMagic, sizeof(kFrameMagic));
  binio::write<std::uint32_t>(out, kFrameVersion);
  binio::write<std::uint64_t>(out, ft.num_frames);
  binio::write<std::uint64_t>(out, ft.n_mels);
  binio::write<std::uint64_t>(out, ft.frame_size);
  for (float v : ft.data) binio::write<float>(out, v);
  if (!out) fail(ErrorCode::kIoFailure, "short write to " + path.string());

  std::ofstream meta(frame_meta_path(path));
  if (!meta) fail(ErrorCode::kIoFailure, "cannot write frame metadata for " + path.string());
  meta << "sample_rate = " << ft.sample_rate << "\n"
       << "hop_length = " << ft.hop_length << "\n"
       << "frame_size = " << ft.frame_size << "\n"
       << "hop_size = " << ft.hop_size << "\n"
       << "first_column = " << (ft.origin_columns.empty() ? 0 : ft.origin_columns.front())
       << "\n";
}

inline FrameTensor load_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kFrameMagic, 8) != 0) {
    fail(ErrorCode::kCorruptHeader, path.string() + " is not a frame tensor file");
  }
  std::uint32_t version = 0;
  std::uint64_t dims[3] = {};
  if (!binio::read(in, version) || !binio::read(in, dims[0]) || !binio::read(in, dims[1]) ||
      !binio::read(in, dims[2])) {
    fail(ErrorCode::kCorruptHeader, "truncated frame tensor header");
  }
  if (version != kFrameVersion) {
    fail(ErrorCode::kVersionMismatch, "frame tensor version " + std::to_string(version));
  }
  FrameTensor ft;
  ft.num_frames = dims[0];
  ft.n_mels = dims[1];
  ft.frame_size = dims[2];
  ft.data.resize(ft.num_frames * ft.n_mels * ft.frame_size);
  for (float& v : ft.data) {
    if (!binio::read(in, v)) fail(ErrorCode::kCorruptHeader, "truncated frame tensor data");
  }

  const auto kv = read_key_values(frame_meta_path(path));
  auto get = [&](const char* key) -> long long {
    auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::kCorruptHeader, std::string("frame metadata lacks ") + key);
    return static_cast<long long>(parse_double(it->second));
  };
  ft.sample_rate = static_cast<int>(get("sample_rate"));
  ft.hop_length = static_cast<int>(get("hop_length"));
  ft.hop_size = static_cast<std::size_t>(get("hop_size"));
  if (static_cast<std::size_t>(get("frame_size")) != ft.frame_size) {
    fail(ErrorCode::kCorruptHeader, "frame metadata disagrees with tensor dims");
  }
  const auto first = static_cast<std::size_t>(get("first_column"));
  ft.origin_columns.resize(ft.num_frames);
  for (std::size_t f = 0; f < ft.num_frames; ++f) ft.origin_columns[f] = first + f * ft.hop_size;
  return ft;
}

// ---------------------------------------------------------------------------
// Text matrices: a "# aad-matrix <name> rows=R cols=C" header, then one
// whitespace-separated row per line in shortest round-trip decimal form.

inline void save_matrix(const std::filesystem::path& path, const std::string& name,
                        const RowMatrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << "# aad-matrix " << name << " rows=" << m.rows() << " cols=" << m.cols() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

inline RowMatrix load_matrix(const std::filesystem::path& path, std::string* name = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string hash, tag, nm, rows_s, cols_s;
  hs >> hash >> tag >> nm >> rows_s >> cols_s;
  if (hash != "#" || tag != "aad-matrix" || rows_s.rfind("rows=", 0) != 0 ||
      cols_s.rfind("cols=", 0) != 0) {
    fail(ErrorCode::kCorruptHeader, path.string() + " is not an aad matrix file");
  }
  if (name) *name = nm;
  const auto rows = static_cast<Eigen::Index>(parse_double(rows_s.substr(5)));
  const auto cols = static_cast<Eigen::Index>(parse_double(cols_s.substr(5)));
  RowMatrix m(rows, cols);
  std::string tok;
  for (Eigen::Index i = 0; i < rows * cols; ++i) {
    if (!(in >> tok)) fail(ErrorCode::kCorruptHeader, "matrix file truncated");
    m(i / cols, i % cols) = parse_double(tok);
  }
  return m;
}

/// One score per line, preceded by a "# aad-scores n=N" header.
inline void save_scores(const std::filesystem::path& path, std::span<const double> scores) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << "# aad-scores n=" << scores.size() << "\n";
  for (double s : scores) out << format_double(s) << '\n';
}

inline std::vector<double> load_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_double(line));
  }
  return out;
}

}  // namespace aad
