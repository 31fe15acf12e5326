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

// Synthetic recordings and the size/conversion/read benchmark.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slf/codec.hpp"
#include "slf/edf.hpp"
#include "slf/model.hpp"

namespace slf {

enum class SignalKind : std::uint8_t {
  gaussian_noise,
  sine_plus_noise,
  int16_quantized
};

std::string_view to_string(SignalKind kind);
std::optional<SignalKind> parse_signal_kind(std::string_view text);

// int16_quantized samples are float32(d * kQuantizationGain) with
// d = round(N(0, 1) * kQuantizationSigma) clamped to int16, the calibration
// of a +-250 physical range over the full int16 digital range.
inline constexpr double kQuantizationGain = 500.0 / 65535.0;
inline constexpr double kQuantizationSigma = 64.0;

struct SynthChannel {
  std::string name;
  double sampling_rate = 0.0;
  SignalKind kind = SignalKind::gaussian_noise;
};

struct SynthSpec {
  int n_subjects = 1;
  double duration_sec = 60.0;
  std::vector<SynthChannel> channels;
  std::uint64_t seed = 0;
  std::string dataset_name{"synthetic"};
  std::string series_name{"synthetic"};

  // Throws Error("invalid_spec").
  void validate() const;
  std::uint64_t total_samples() const;
};

// Deterministic in the spec. Subjects are "sub-001", "sub-002", ...; each
// gets a "hypnogram" set of 30 s epochs cycling W, N1, N2, N3, R.
Dataset generate_synthetic_dataset(const SynthSpec& spec);

struct BenchConfigRow {
  std::string label;
  ArrayCodecSpec codec;
};

// slf-raw, slf-zstd9, slf-zstd22.
std::vector<BenchConfigRow> default_bench_rows();

inline constexpr std::string_view kBenchCsvHeader =
    "format,data_type,compression,size_bytes,conversion_time_s,read_time_s,"
    "read_speed_bps";

struct ArrayMean {
  // "<series>/<subject>/<array>".
  std::string array;
  double mean = 0.0;
};

struct BenchRow {
  std::string format;
  std::string data_type;
  std::string compression;
  std::uint64_t size_bytes = 0;
  // Absent for the source-format row.
  std::optional<double> conversion_time_s;
  double read_time_s = 0.0;
  // size / read time for uncompressed rows, compressed bytes read / read
  // time otherwise.
  double read_speed_bps = 0.0;
  std::uint64_t bytes_read = 0;
  std::vector<ArrayMean> means;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  unsigned workers = 1;
  bool cold = false;
};

struct BenchOptions {
  fs::path work_dir;
  std::vector<BenchConfigRow> rows = default_bench_rows();
  unsigned workers = 1;
  // Read from a fresh copy of each dataset directory.
  bool cold = false;
  // Keep the written datasets under work_dir.
  bool keep = false;
};

// Sequential double sum divided by the count; NaN for empty arrays.
double array_mean(const ArrayValues& values);

// Writes `dataset` once per configuration row and reads it back.
BenchReport run_bench(const Dataset& dataset, const BenchOptions& options);

// Converts every EDF file of `edf_dir` once per configuration row, after an
// "edf" row that reads the source files themselves.
BenchReport run_bench_edf(const fs::path& edf_dir, const BenchOptions& options,
                          ParseMode mode = ParseMode::lenient);

std::string bench_csv(const BenchReport& report);
// Aligned plain-text table with the same number strings as the CSV.
std::string bench_table(const BenchReport& report);

}  // namespace slf
