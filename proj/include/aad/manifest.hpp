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

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "aad/common.hpp"

namespace aad {

enum class Split { kTrain, kVal, kCalib, kTest };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kCalib: return "calib";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "calib") return Split::kCalib;
  if (s == "test") return Split::kTest;
  fail(ErrorCode::kInvalidArgument, "unknown split '" + s + "'");
}

struct ManifestRecord {
  std::filesystem::path wav;
  Split split = Split::kTrain;
  std::optional<std::filesystem::path> labels;
};

/// Line format: "path<TAB>split<TAB>labels_path?"; '#' lines are comments.
/// Relative paths resolve against the manifest's directory. Train and val
/// records are normal-only and must not carry labels; calib and test
/// records without a labels file are treated as anomaly-free.
struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::vector<ManifestRecord> split(Split s) const {
    std::vector<ManifestRecord> out;
    for (const auto& r : records) {
      if (r.split == s) out.push_back(r);
    }
    return out;
  }

  bool has(Split s) const { return !split(s).empty(); }

  void validate() const {
    for (const auto& r : records) {
      if ((r.split == Split::kTrain || r.split == Split::kVal) && r.labels) {
        fail(ErrorCode::kInvalidArgument,
             std::string(split_name(r.split)) + " record " + r.wav.string() +
                 " carries labels; train and val must be normal-only");
      }
    }
    if (!has(Split::kTrain)) fail(ErrorCode::kInvalidArgument, "manifest has no train records");
  }

  static DatasetManifest load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    DatasetManifest m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cols;
      std::size_t start = 0;
      for (;;) {
        const auto tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      if (cols.size() < 2 || cols.size() > 3 || cols[0].empty()) {
        fail(ErrorCode::kInvalidArgument,
             path.string() + ":" + std::to_string(line_no) + ": expected path<TAB>split[<TAB>labels]");
      }
      ManifestRecord r;
      r.wav = resolve(cols[0]);
      r.split = parse_split(cols[1]);
      if (cols.size() == 3 && !cols[2].empty()) r.labels = resolve(cols[2]);
      m.records.push_back(std::move(r));
    }
    m.validate();
    return m;
  }

  /// Writes paths relative to `base` when they live under it.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
    const auto base = path.parent_path();
    auto rel = [&](const std::filesystem::path& p) {
      const auto r = p.lexically_relative(base);
      return (r.empty() || r.native().starts_with("..")) ? p.string() : r.string();
    };
    out << "# path\tsplit\tlabels\n";
    for (const auto& r : records) {
      out << rel(r.wav) << '\t' << split_name(r.split);
      if (r.labels) out << '\t' << rel(*r.labels);
      out << '\n';
    }
  }
};

}  // namespace aad
