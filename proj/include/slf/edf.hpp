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

// EDF and EDF+C reading, and conversion of EDF files into SLF subjects.
//
// Issue codes: truncated_header, malformed_numeric_field, malformed_date,
// inconsistent_header_bytes, zero_digital_range, truncated_record,
// malformed_tal, unsupported_discontinuous, duplicate_label,
// invalid_mapping, empty_source_directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slf/codec.hpp"
#include "slf/model.hpp"
#include "slf/store.hpp"

namespace slf {

enum class ParseMode : std::uint8_t { strict, lenient };

std::string_view to_string(ParseMode mode);
std::optional<ParseMode> parse_parse_mode(std::string_view text);

using Warnings = std::vector<std::string>;

inline constexpr std::string_view kEdfAnnotationsLabel = "EDF Annotations";

struct EdfSignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = -32768;
  int digital_max = 32767;
  std::string prefiltering;
  int samples_per_record = 1;
  std::string reserved;
  bool is_annotation_channel = false;

  bool operator==(const EdfSignalHeader&) const = default;
};

struct EdfHeader {
  std::string version{"0"};
  std::string patient_id;
  std::string recording_id;
  Timestamp start_datetime;
  std::int64_t header_bytes = 256;
  std::string reserved;
  // -1 when the writer did not know the count.
  std::int64_t n_records = 0;
  double record_duration_sec = 1.0;
  int n_signals = 0;
  std::vector<EdfSignalHeader> signals;

  bool is_edf_plus() const { return reserved.starts_with("EDF+"); }
  bool is_discontinuous() const { return reserved.starts_with("EDF+D"); }
  // Bytes in one data record.
  std::int64_t record_bytes() const;

  bool operator==(const EdfHeader&) const = default;
};

// Decodes the fixed header and the per-signal headers. Needs the first
// 256 + 256 * n_signals bytes. In lenient mode malformed fields fall back to
// defaults and a warning is appended:
//   n_records           -> -1 (count taken from the file size)
//   record_duration_sec -> 1
//   physical_min/max    -> digital_min/max
//   digital_min/max     -> -32768 / 32767
//   start date/time     -> 01.01.85 00.00.00
// A comma is accepted as decimal separator. n_signals and samples_per_record
// define the byte layout and are errors in both modes.
EdfHeader parse_edf_header(ByteView bytes, ParseMode mode,
                           Warnings* warnings = nullptr);

// physical = (d - dmin) * (pmax - pmin) / (dmax - dmin) + pmin, evaluated
// with compensated arithmetic so that it is within one ulp of the exact
// value and maps the digital extremes exactly onto the physical ones.
// With dmax == dmin, strict mode throws Error("zero_digital_range") and
// lenient mode returns d + pmin.
double digital_to_physical(int d, const EdfSignalHeader& sh,
                           ParseMode mode = ParseMode::strict);

struct PhysicalSignal {
  std::vector<float> values;
  double sampling_rate = 0.0;
};

// An EDF file held in memory.
class EdfFile {
 public:
  static EdfFile open(const fs::path& path, ParseMode mode);
  static EdfFile from_bytes(Bytes bytes, ParseMode mode);

  const EdfHeader& header() const noexcept { return header_; }
  ParseMode mode() const noexcept { return mode_; }
  // Header and record-count warnings gathered while opening.
  const Warnings& warnings() const noexcept { return warnings_; }
  // Complete data records present in the file.
  std::int64_t record_count() const noexcept { return records_; }

  std::vector<std::int16_t> read_signal_digital(std::size_t index) const;
  // Throws Error("out_of_range") for a bad index or an annotation channel.
  PhysicalSignal read_signal_physical(std::size_t index) const;
  // Raw bytes of one signal concatenated across records.
  Bytes read_signal_bytes(std::size_t index) const;

 private:
  EdfFile(Bytes bytes, ParseMode mode);

  Bytes bytes_;
  ParseMode mode_;
  EdfHeader header_;
  Warnings warnings_;
  std::int64_t records_ = 0;
  std::vector<std::int64_t> signal_offsets_;
};

// ---------------------------------------------------------------------------
// EDF+ annotations
// ---------------------------------------------------------------------------

struct TalAnnotation {
  double onset_sec = 0.0;
  std::optional<double> duration_sec;
  std::vector<std::string> texts;

  bool operator==(const TalAnnotation&) const = default;
};

// Decodes a stream of TALs. NUL bytes between TALs are padding. Empty texts
// are dropped and TALs left without text are omitted. Strict mode throws
// Error("malformed_tal"); lenient mode skips to the next NUL with a warning
// and replaces invalid UTF-8.
std::vector<TalAnnotation> parse_tal_records(ByteView bytes,
                                             ParseMode mode = ParseMode::strict,
                                             Warnings* warnings = nullptr);

struct StageAliasRule {
  std::string pattern;
  SleepStage stage;
};

struct EventSetRule {
  std::string pattern;
  std::string set_name;
};

// Patterns are case-insensitive ECMAScript regular expressions matched
// against the whole annotation text. User stage aliases are tried before the
// built-in table.
struct AnnotationMapping {
  std::vector<StageAliasRule> stage_aliases;
  std::vector<EventSetRule> event_sets;

  // {"stage_aliases": {pattern: stage}, "event_sets": [{"pattern",
  // "set_name"}]}. Throws Error("invalid_mapping").
  static AnnotationMapping from_json(std::string_view text);
};

inline constexpr std::string_view kHypnogramSet = "hypnogram";
inline constexpr std::string_view kEdfAnnotationsSet = "edf_annotations";

// One Annotation per TAL text. Stage texts go to the aasm_sleep_stage set
// "hypnogram", event-set matches to their free_text sets, everything else to
// "edf_annotations". Empty sets are not returned.
std::vector<AnnotationSet> map_annotations(
    const std::vector<TalAnnotation>& tals, const AnnotationMapping& mapping,
    Warnings* warnings = nullptr);

// ---------------------------------------------------------------------------
// Conversion
// ---------------------------------------------------------------------------

// Trim, lowercase, replace non-alphanumerics with '_', collapse runs of '_'.
std::string sanitize_label(std::string_view label);

// Patient id "code sex birthdate name": sex "M"/"F", birthdate dd-MMM-yyyy.
void parse_edf_plus_patient(std::string_view patient_id,
                            const Timestamp& recording_start,
                            SubjectMetadata& metadata);

struct ConvertedSubject {
  Subject subject;
  Warnings warnings;
};

// Array names are sanitized labels. A collision is Error("duplicate_label")
// in strict mode and gets a "_2", "_3", ... suffix in lenient mode.
ConvertedSubject convert_edf_to_subject(const EdfFile& edf,
                                        const std::string& subject_id,
                                        const AnnotationMapping& mapping = {});
ConvertedSubject convert_edf_to_subject(const fs::path& edf_path,
                                        const std::string& subject_id,
                                        ParseMode mode,
                                        const AnnotationMapping& mapping = {});

struct ConvertOptions {
  std::string dataset_name;
  std::string series_name;
  ArrayCodecSpec codec;
  ParseMode mode = ParseMode::lenient;
  AnnotationMapping mapping;
  bool overwrite = false;
  unsigned workers = 1;
};

struct SkippedFile {
  fs::path path;
  std::string code;
  std::string reason;
};

struct ConversionReport {
  fs::path dataset_dir;
  std::size_t converted = 0;
  std::vector<SkippedFile> skipped;
  // Prefixed with the source file name.
  Warnings warnings;
  WriteReport written;
  double elapsed_sec = 0.0;
};

// One subject per *.edf file of `src_dir` (subject id = file stem), written
// to <dest_root>/<dataset_name>/<series_name>/. Throws
// Error("empty_source_directory"), Error("destination_exists"), and in
// strict mode the first per-file failure.
ConversionReport convert_directory(const fs::path& src_dir,
                                   const fs::path& dest_root,
                                   const ConvertOptions& options);

// ---------------------------------------------------------------------------
// Writing (test fixtures and benchmarks)
// ---------------------------------------------------------------------------

// Serializes the header fields verbatim (header_bytes and n_signals
// included, so inconsistent files can be produced) followed by the data
// records. `signal_data[i]` holds n_records * samples_per_record * 2 bytes.
// Throws Error("field_overflow") when a value does not fit its field.
Bytes write_edf(const EdfHeader& header, const std::vector<Bytes>& signal_data);

Bytes digital_bytes(const std::vector<std::int16_t>& samples);

// Annotation-channel bytes for consecutive records: each record starts with
// the time-keeping TAL "+<onset>\x14\x14\0" followed by its TALs and is
// padded with NULs to samples_per_record * 2 bytes.
Bytes annotation_channel_bytes(
    const std::vector<std::vector<TalAnnotation>>& per_record,
    double record_duration_sec, int samples_per_record);

std::string encode_tal(const TalAnnotation& tal);

}  // namespace slf
