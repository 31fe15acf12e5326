// Copyright 2026 The SLF Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slf/codec.hpp"
#include "slf/model.hpp"

namespace testutil {

namespace fs = std::filesystem;

inline fs::path golden(const std::string& name) {
  return fs::path(SLF_GOLDEN_DIR) / name;
}

inline slf::Bytes read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_bytes(const fs::path& p, const slf::Bytes& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
}

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "slf") {
    static std::atomic<int> counter{0};
    const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(now) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// Every file below `dir` with its content, for before/after comparisons.
inline std::vector<std::pair<std::string, slf::Bytes>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, slf::Bytes>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      out.emplace_back(fs::relative(e.path(), dir).string(), read_bytes(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Values with arbitrary bit patterns (NaNs and infinities included).
inline slf::ArrayValues random_values(std::mt19937_64& rng, slf::ValueType type,
                                      std::size_t n) {
  switch (type) {
    case slf::ValueType::float32: {
      std::vector<float> v(n);
      for (auto& x : v) x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
      return v;
    }
    case slf::ValueType::float64: {
      std::vector<double> v(n);
      for (auto& x : v) x = std::bit_cast<double>(rng());
      return v;
    }
    case slf::ValueType::int16: {
      std::vector<std::int16_t> v(n);
      for (auto& x : v) x = static_cast<std::int16_t>(rng());
      return v;
    }
    case slf::ValueType::int32: {
      std::vector<std::int32_t> v(n);
      for (auto& x : v) x = static_cast<std::int32_t>(rng());
      return v;
    }
  }
  return {};
}

inline constexpr slf::ValueType kAllTypes[] = {
    slf::ValueType::float32, slf::ValueType::float64, slf::ValueType::int16,
    slf::ValueType::int32};

// A valid dataset: 1-3 series, 1-5 subjects each, 0-4 arrays of length
// [0, max_len] with all value types, a hypnogram and a free-text set.
inline slf::Dataset random_dataset(std::mt19937_64& rng, std::size_t max_len,
                                   const std::string& name = "random") {
  std::uniform_int_distribution<int> n_series(1, 3), n_subjects(1, 5),
      n_arrays(0, 4), pick_type(0, 3), stage(0, 4);
  std::uniform_int_distribution<std::size_t> length(0, max_len);
  static constexpr double kRates[] = {1.0, 8.0, 64.0, 100.0, 128.0, 256.0, 0.5};
  slf::Dataset ds;
  ds.name = name;
  const int ns = n_series(rng);
  for (int s = 0; s < ns; ++s) {
    slf::Series series;
    series.name = "series-" + std::to_string(s);
    const int nsub = n_subjects(rng);
    for (int j = 0; j < nsub; ++j) {
      slf::Subject sub;
      sub.metadata.subject_id = "sub_" + std::to_string(j);
      if (rng() % 2) {
        sub.metadata.recording_start = slf::Timestamp::from_civil(
            2000 + int(rng() % 30), 1 + unsigned(rng() % 12), 1 + unsigned(rng() % 28),
            unsigned(rng() % 24), unsigned(rng() % 60), unsigned(rng() % 60),
            std::int64_t(rng() % 2) * std::int64_t(rng() % 1000000));
      }
      if (rng() % 2) sub.metadata.age = double(rng() % 100) + 0.5;
      if (rng() % 2) sub.metadata.sex = rng() % 2 ? "F" : "M";
      if (rng() % 2) {
        sub.metadata.extra.emplace("site", std::string("lab-") + std::to_string(rng() % 9));
        sub.metadata.extra.emplace("visit", std::int64_t(rng() % 5));
        sub.metadata.extra.emplace("sham", bool(rng() % 2));
        sub.metadata.extra.emplace("note", std::monostate{});
        sub.metadata.extra.emplace("score", double(rng() % 1000) / 8.0);
      }
      const int na = n_arrays(rng);
      double span = 0.0;
      for (int a = 0; a < na; ++a) {
        const slf::ValueType t = kAllTypes[pick_type(rng)];
        const double rate = kRates[rng() % std::size(kRates)];
        const std::size_t n = length(rng);
        std::optional<std::string> unit;
        if (rng() % 2) unit = "uV";
        auto arr = slf::SampleArray::from_values("a" + std::to_string(a), rate,
                                                 random_values(rng, t, n), unit,
                                                 double(rng() % 3));
        span = std::max(span, arr.attributes().start_offset + arr.attributes().duration_sec());
        sub.add_array(std::move(arr));
      }
      if (rng() % 2) {
        slf::AnnotationSet hyp;
        hyp.name = "hypnogram";
        hyp.name_type = std::string(slf::kAasmSleepStage);
        if (rng() % 2) hyp.scorer = "scorer-" + std::to_string(rng() % 3);
        for (int e = 0; e * 30.0 + 30.0 <= span && e < 20; ++e) {
          hyp.annotations.push_back(
              {std::string(slf::to_string(slf::kAllSleepStages[stage(rng)])),
               e * 30.0, 30.0, {}});
        }
        sub.add_annotation_set(std::move(hyp));
      }
      if (rng() % 2) {
        slf::AnnotationSet ev;
        ev.name = "events";
        slf::Annotation a{"Lights off", 0.125, 0.0, {}};
        a.extra.emplace("confidence", 0.75);
        ev.annotations.push_back(a);
        sub.add_annotation_set(std::move(ev));
      }
      series.add_subject(std::move(sub));
    }
    ds.add_series(std::move(series));
  }
  return ds;
}

}  // namespace testutil
