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

// Subsetting and preprocessing of a stored dataset into a new one:
// select arrays (optionally renamed), decimate by integer factors, cast
// value types, and write the result with any codec.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slf/codec.hpp"
#include "slf/model.hpp"
#include "slf/store.hpp"

namespace slf {

// Hamming-windowed sinc low-pass, 10 * factor + 1 taps, cutoff 0.45 / factor
// cycles per input sample, symmetric, normalized to unit DC gain.
std::vector<double> design_lowpass_fir(int factor);

// Magnitude of the filter response at `freq` cycles per sample.
double fir_response(std::span<const double> taps, double freq);

// Low-pass filter with reflect padding, then every factor-th sample from
// index 0. Output length is ceil(n / factor). Factor 1 returns the input.
std::vector<double> decimate(std::span<const double> values, int factor);
// Same on typed values; the result keeps the input value type (integer
// outputs are rounded as by cast_values).
ArrayValues decimate(const ArrayValues& values, int factor);

// float -> float rounds to nearest; float -> int rounds half away from zero
// and saturates; NaN -> int throws Error("nan_to_int").
ArrayValues cast_values(const ArrayValues& values, ValueType target);

inline constexpr std::string_view kAllArrays = "*";

struct ArraySelection {
  // An array name, or "*" for every array of the subject.
  std::string source_name;
  std::optional<std::string> new_name;
  std::optional<double> target_sampling_rate;
  std::optional<ValueType> target_value_type;
};

struct ExtractConfig {
  std::optional<std::set<std::string>> series_filter;
  std::optional<std::set<std::string>> subject_filter;
  std::vector<ArraySelection> selections;
  // Annotation sets to copy; all when absent.
  std::optional<std::set<std::string>> annotation_sets;
  ArrayCodecSpec output_codec;
  // Destination dataset name; the source name when absent.
  std::optional<std::string> dataset_name;
  bool overwrite = false;
  unsigned workers = 1;

  // Throws Error("invalid_config").
  void validate() const;

  // Keys: series_filter, subject_filter, selections [{source_name, new_name,
  // target_sampling_rate, target_value_type}], annotation_sets,
  // output_codec {kind: "raw" | "chunked_zstd", zstd_level, chunk_len},
  // dataset_name. Throws Error("invalid_config"), or Error("invalid_codec")
  // for an out-of-range output codec.
  static ExtractConfig from_json(std::string_view text);
};

struct ResampledArray {
  std::string series;
  std::string subject;
  std::string array;
  int factor = 1;
};

struct ExtractReport {
  fs::path dataset_dir;
  std::size_t subjects_processed = 0;
  std::size_t arrays_written = 0;
  std::vector<ResampledArray> resampled;
  // One per subject lacking a selected array, among others.
  std::vector<std::string> warnings;
};

// Integer factor source_rate / target_rate, or Error("non_integer_factor").
int decimation_factor(double source_rate, double target_rate);

// `src_root` is a dataset directory; the result is written to
// <dest_root>/<dataset name>/. The source is only read. Throws
// Error("non_integer_factor") before anything is written, and
// Error("empty_selection") when no subject has any selected array.
ExtractReport extract(const fs::path& src_root, const ExtractConfig& config,
                      const fs::path& dest_root);

}  // namespace slf
