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

// On-disk layout of a dataset:
//
//   <root>/<dataset>/metadata.json
//   <root>/<dataset>/<series>/metadata.json
//   .../<subject>/metadata.json
//   .../<subject>/annotations/<set>.json
//   .../<subject>/<array>/attributes.json
//   .../<subject>/<array>/data.npy                    (raw)
//   .../<subject>/<array>/data.zarr/{.zarray,0,1,...} (chunked_zstd)
//
// JSON documents are UTF-8, 2-space indented and newline-terminated, except
// .zarray which uses the single-line Zarr form.
//
// Storage issue codes, in addition to the model codes:
//   not_slf_dataset, io_error, bad_json, schema_error, missing_file,
//   ambiguous_storage, bad_magic, unsupported_dtype, unsupported_shape,
//   truncated_header, truncated_payload, shape_mismatch, dtype_mismatch,
//   invalid_codec, corrupt_chunk, name_mismatch (warning)

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "slf/codec.hpp"
#include "slf/model.hpp"

namespace slf {

namespace fs = std::filesystem;

inline constexpr char kMetadataFile[] = "metadata.json";
inline constexpr char kAttributesFile[] = "attributes.json";
inline constexpr char kAnnotationsDir[] = "annotations";
inline constexpr char kRawDataFile[] = "data.npy";
inline constexpr char kChunkedDataDir[] = "data.zarr";
inline constexpr char kZarrayFile[] = ".zarray";

// I/O counters shared by readers. All counters only ever grow.
struct IoStats {
  std::atomic<std::uint64_t> bytes_read{0};
  std::atomic<std::uint64_t> files_opened{0};
  // Subset of bytes_read that came from sample-array payloads (NPY data
  // after the preamble, Zarr chunk files).
  std::atomic<std::uint64_t> payload_bytes_read{0};
};

struct StoredArrayRef {
  fs::path directory;
  CodecKind kind = CodecKind::raw;
  ArrayAttributes attributes;
  // raw: offset of the first payload byte in data.npy.
  std::uint64_t data_offset = 0;
  // chunked_zstd: parsed .zarray.
  ZarrArrayMeta zarr;
};

// Reads attributes.json and the array header (NPY preamble or .zarray).
// Verifies that the stored array agrees with the attributes without reading
// payload bytes. Throws Error with a storage issue code.
StoredArrayRef open_array(const fs::path& array_dir, IoStats* stats = nullptr);

// Samples [start, start + count). Raw arrays read only the requested byte
// range; chunked arrays read only overlapping chunks. Thread-safe.
// Throws Error("out_of_range") or Error("corrupt_chunk").
ArrayValues read_window(const StoredArrayRef& ref, std::int64_t start,
                        std::int64_t count, IoStats* stats = nullptr);

struct ReadOptions {
  std::optional<std::set<std::string>> series_filter;
  std::optional<std::set<std::string>> subject_filter;
  bool lazy_arrays = true;
  // Receives counters for every file touched, including later lazy reads.
  std::shared_ptr<IoStats> stats;
};

// `root` is the dataset directory (the one holding the dataset's
// metadata.json). Entries are loaded in lexicographic directory order.
// Throws Error("not_slf_dataset") or ValidationError listing every problem
// found, each tagged with the offending file.
Dataset read_dataset(const fs::path& root, const ReadOptions& opts = {});

// Full check used by `slf validate`: loads every file and decodes every
// array payload. Returns all issues (errors and warnings). Throws only
// Error("not_slf_dataset").
Issues check_dataset(const fs::path& root);

struct WriteReport {
  std::size_t series = 0;
  std::size_t subjects = 0;
  std::size_t arrays = 0;
  std::size_t annotation_sets = 0;
  std::uint64_t total_bytes = 0;
};

struct WriteOptions {
  ArrayCodecSpec codec;
  bool overwrite = false;
  unsigned workers = 1;
};

// Incremental writer for one dataset directory. Subjects are written into a
// hidden temporary directory and renamed into place, so a subject directory
// is either complete or absent. write_subject may be called concurrently for
// distinct subjects.
class DatasetWriter {
 public:
  // Creates <root>/<dataset_name>/ and its metadata.json. Throws
  // Error("destination_exists") unless `overwrite`.
  DatasetWriter(const fs::path& root, const std::string& dataset_name,
                ArrayCodecSpec codec, bool overwrite = false,
                const std::string& format_version = std::string(kFormatVersion));

  const fs::path& dataset_dir() const noexcept { return dataset_dir_; }

  void add_series(const std::string& name);
  // Throws ValidationError when the subject has errors.
  void write_subject(const std::string& series, const Subject& subject);

  WriteReport report() const;

 private:
  fs::path dataset_dir_;
  ArrayCodecSpec codec_;
  mutable std::mutex mutex_;
  WriteReport report_;
};

// Validates, then writes <root>/<dataset.name>/.
WriteReport write_dataset(const Dataset& dataset, const fs::path& root,
                          const WriteOptions& opts = {});

struct ArraySummary {
  std::string name;
  std::int64_t n_samples = 0;
  double sampling_rate = 0.0;
  ValueType value_type = ValueType::float32;
  double start_offset = 0.0;

  bool operator==(const ArraySummary&) const = default;
};

struct SubjectSummary {
  std::string subject_id;
  std::vector<ArraySummary> arrays;
  std::vector<std::string> annotation_sets;

  bool operator==(const SubjectSummary&) const = default;
};

struct SeriesSummary {
  std::string name;
  std::vector<SubjectSummary> subjects;

  bool operator==(const SeriesSummary&) const = default;
};

struct DatasetSummary {
  std::string name;
  std::vector<SeriesSummary> series;

  std::size_t n_subjects() const;
  bool operator==(const DatasetSummary&) const = default;
};

// Summary built from JSON metadata only; array payloads and headers are
// never opened.
DatasetSummary list_dataset(const fs::path& root, IoStats* stats = nullptr);
DatasetSummary summarize(const Dataset& dataset);

// Total size of all regular files below `dir`.
std::uint64_t directory_size(const fs::path& dir);

}  // namespace slf
