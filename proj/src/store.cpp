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

#include "slf/store.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "json_model.hpp"
#include "parallel.hpp"

namespace slf {

namespace {

// ---------------------------------------------------------------------------
// Instrumented file access
// ---------------------------------------------------------------------------

void count_open(IoStats* stats) {
  if (stats) stats->files_opened.fetch_add(1, std::memory_order_relaxed);
}

void count_bytes(IoStats* stats, std::uint64_t n, bool payload) {
  if (!stats) return;
  stats->bytes_read.fetch_add(n, std::memory_order_relaxed);
  if (payload) stats->payload_bytes_read.fetch_add(n, std::memory_order_relaxed);
}

std::ifstream open_input(const fs::path& path, IoStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::error_code ec;
    if (!fs::exists(path, ec)) {
      throw Error("missing_file", "missing file " + path.string());
    }
    throw Error("io_error", "cannot open " + path.string());
  }
  count_open(stats);
  return in;
}

std::string read_text_file(const fs::path& path, IoStats* stats) {
  std::ifstream in = open_input(path, stats);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  count_bytes(stats, text.size(), false);
  return text;
}

Bytes read_whole_file(const fs::path& path, IoStats* stats, bool payload) {
  std::ifstream in = open_input(path, stats);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes out(size);
  if (size && !in.read(reinterpret_cast<char*>(out.data()),
                       static_cast<std::streamsize>(size))) {
    throw Error("io_error", "short read on " + path.string());
  }
  count_bytes(stats, size, payload);
  return out;
}

// Reads up to `len` bytes at `offset` from an already opened stream.
Bytes read_at(std::ifstream& in, const fs::path& path, std::uint64_t offset,
              std::size_t len, IoStats* stats, bool payload) {
  Bytes out(len);
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(len));
  const auto got = static_cast<std::size_t>(in.gcount());
  count_bytes(stats, got, payload);
  if (got != len) {
    throw Error("truncated_payload", "unexpected end of " + path.string());
  }
  return out;
}

std::uint64_t write_file(const fs::path& path, const void* data,
                         std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot create " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  out.close();
  if (!out) throw Error("io_error", "write failed for " + path.string());
  return size;
}

std::uint64_t write_text(const fs::path& path, const std::string& text) {
  return write_file(path, text.data(), text.size());
}

std::uint64_t write_bytes(const fs::path& path, const Bytes& bytes) {
  return write_file(path, bytes.data(), bytes.size());
}

json::Json read_json(const fs::path& path, IoStats* stats) {
  return json::parse(read_text_file(path, stats));
}

// Visible subdirectories in lexicographic order. Hidden entries (including
// in-progress subject writes) are skipped.
std::vector<std::string> sorted_subdirs(const fs::path& dir) {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    if (entry.is_directory(ec)) out.push_back(name);
  }
  if (ec) throw Error("io_error", "cannot list " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> sorted_json_files(const fs::path& dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file(ec) && entry.path().extension() == ".json") {
      out.push_back(entry.path());
    }
  }
  if (ec) throw Error("io_error", "cannot list " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Lazy array source
// ---------------------------------------------------------------------------

class StoredArraySource final : public ArraySource {
 public:
  StoredArraySource(StoredArrayRef ref, std::shared_ptr<IoStats> stats)
      : ref_(std::move(ref)), stats_(std::move(stats)) {}

  ArrayValues read(std::int64_t start, std::int64_t count) const override {
    return read_window(ref_, start, count, stats_.get());
  }

 private:
  StoredArrayRef ref_;
  std::shared_ptr<IoStats> stats_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Array access
// ---------------------------------------------------------------------------

StoredArrayRef open_array(const fs::path& array_dir, IoStats* stats) {
  StoredArrayRef ref;
  ref.directory = array_dir;
  ref.attributes =
      json::array_attributes_from_json(read_json(array_dir / kAttributesFile, stats));

  std::error_code ec;
  const fs::path npy = array_dir / kRawDataFile;
  const fs::path zarr = array_dir / kChunkedDataDir;
  const bool has_npy = fs::is_regular_file(npy, ec);
  const bool has_zarr = fs::is_directory(zarr, ec);
  if (has_npy && has_zarr) {
    throw Error("ambiguous_storage",
                "both data.npy and data.zarr exist in " + array_dir.string());
  }
  if (!has_npy && !has_zarr) {
    throw Error("missing_file", "no data.npy or data.zarr in " + array_dir.string());
  }
  const std::int64_t declared = ref.attributes.n_samples;
  const ValueType declared_type = ref.attributes.value_type;

  if (has_npy) {
    ref.kind = CodecKind::raw;
    std::ifstream in = open_input(npy, stats);
    in.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::uint64_t>(in.tellg());
    if (file_size < 10) {
      // Too short to even hold the magic; classify by what is there.
      Bytes head = read_at(in, npy, 0, static_cast<std::size_t>(file_size), stats, false);
      if (!has_npy_magic(head)) throw Error("bad_magic", "missing NPY magic bytes");
      throw Error("truncated_header", "NPY preamble cut short in " + npy.string());
    }
    Bytes head = read_at(in, npy, 0, 10, stats, false);
    if (!has_npy_magic(head)) throw Error("bad_magic", "missing NPY magic bytes");
    const std::size_t prefix = head[6] == 1 ? 10 : 12;
    if (prefix == 12) {
      Bytes extra = read_at(in, npy, 10, 2, stats, false);
      head.insert(head.end(), extra.begin(), extra.end());
    }
    std::size_t header_len = head[8] | (std::size_t{head[9]} << 8);
    if (prefix == 12) {
      header_len |= (std::size_t{head[10]} << 16) | (std::size_t{head[11]} << 24);
    }
    if (prefix + header_len > file_size) {
      throw Error("truncated_header", "NPY header cut short in " + npy.string());
    }
    Bytes dict = read_at(in, npy, prefix, header_len, stats, false);
    head.insert(head.end(), dict.begin(), dict.end());
    const NpyHeader header = parse_npy_header(head);
    if (header.value_type != declared_type) {
      throw Error("dtype_mismatch",
                  "data.npy holds " + std::string(to_string(header.value_type)) +
                      " but attributes declare " +
                      std::string(to_string(declared_type)));
    }
    if (header.n_samples != declared) {
      throw Error("shape_mismatch",
                  "data.npy shape (" + std::to_string(header.n_samples) +
                      ",) but attributes declare n_samples " +
                      std::to_string(declared));
    }
    const std::uint64_t expected =
        header.data_offset +
        static_cast<std::uint64_t>(header.n_samples) * item_size(header.value_type);
    if (file_size < expected) {
      throw Error("truncated_payload",
                  "data.npy holds " + std::to_string(file_size) + " bytes, " +
                      std::to_string(expected) + " expected");
    }
    if (file_size > expected) {
      throw Error("shape_mismatch",
                  "data.npy has " + std::to_string(file_size - expected) +
                      " bytes beyond the declared shape");
    }
    ref.data_offset = header.data_offset;
  } else {
    ref.kind = CodecKind::chunked_zstd;
    ref.zarr = parse_zarray(read_text_file(zarr / kZarrayFile, stats));
    if (ref.zarr.value_type != declared_type) {
      throw Error("dtype_mismatch",
                  ".zarray dtype is " + std::string(to_string(ref.zarr.value_type)) +
                      " but attributes declare " +
                      std::string(to_string(declared_type)));
    }
    if (ref.zarr.shape != declared) {
      throw Error("shape_mismatch", ".zarray shape [" + std::to_string(ref.zarr.shape) +
                                        "] but attributes declare n_samples " +
                                        std::to_string(declared));
    }
  }
  return ref;
}

ArrayValues read_window(const StoredArrayRef& ref, std::int64_t start,
                        std::int64_t count, IoStats* stats) {
  const std::int64_t n = ref.attributes.n_samples;
  if (start < 0 || count < 0 || start > n || count > n - start) {
    throw Error("out_of_range", "window [" + std::to_string(start) + ", " +
                                    std::to_string(start + count) +
                                    ") outside array of " + std::to_string(n) +
                                    " samples");
  }
  const ValueType type = ref.attributes.value_type;
  const std::size_t isz = item_size(type);
  if (count == 0) return make_empty_values(type);

  if (ref.kind == CodecKind::raw) {
    const fs::path npy = ref.directory / kRawDataFile;
    std::ifstream in = open_input(npy, stats);
    const Bytes payload =
        read_at(in, npy, ref.data_offset + static_cast<std::uint64_t>(start) * isz,
                static_cast<std::size_t>(count) * isz, stats, true);
    return from_le_bytes(payload, type, static_cast<std::size_t>(count));
  }

  const ZarrArrayMeta& meta = ref.zarr;
  const std::int64_t first = start / meta.chunk_len;
  const std::int64_t last = (start + count - 1) / meta.chunk_len;
  Bytes out(static_cast<std::size_t>(count) * isz);
  for (std::int64_t c = first; c <= last; ++c) {
    const std::int64_t chunk_start = c * meta.chunk_len;
    const std::int64_t lo = std::max(start, chunk_start);
    const std::int64_t hi = std::min(start + count, chunk_start + meta.chunk_len);
    std::uint8_t* dst = out.data() + static_cast<std::size_t>(lo - start) * isz;
    const std::size_t len = static_cast<std::size_t>(hi - lo) * isz;

    const fs::path chunk_path = ref.directory / kChunkedDataDir / std::to_string(c);
    std::error_code ec;
    if (!fs::exists(chunk_path, ec)) {
      // Zarr semantics: an absent chunk is entirely fill value.
      const ArrayValues fill = std::visit(
          [&](auto tag) -> ArrayValues {
            using T = typename decltype(tag)::value_type;
            return std::vector<T>(static_cast<std::size_t>(hi - lo),
                                  static_cast<T>(meta.fill_value));
          },
          make_empty_values(type));
      const Bytes fill_bytes = to_le_bytes(fill);
      std::copy(fill_bytes.begin(), fill_bytes.end(), dst);
      continue;
    }
    const Bytes stored = read_whole_file(chunk_path, stats, true);
    ArrayValues decoded;
    try {
      decoded = decode_chunk(stored, meta);
    } catch (const Error& e) {
      throw Error(e.code(), chunk_path.string() + ": " + e.what());
    }
    const Bytes raw = to_le_bytes(decoded);
    std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>((lo - chunk_start) * isz),
                len, dst);
  }
  return from_le_bytes(out, type, static_cast<std::size_t>(count));
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

namespace {

class Loader {
 public:
  Loader(fs::path root, const ReadOptions& opts) : root_(std::move(root)), opts_(opts) {}

  Dataset load() {
    std::error_code ec;
    if (!fs::is_directory(root_, ec) || !fs::is_regular_file(root_ / kMetadataFile, ec)) {
      throw Error("not_slf_dataset",
                  root_.string() + " is not a dataset directory (no metadata.json)");
    }
    Dataset ds;
    ds.name = root_.filename().string();
    try {
      const auto header = json::dataset_header_from_json(
          read_json(root_ / kMetadataFile, stats()));
      ds.name = header.name;
      ds.format_version = header.format_version;
      if (ds.name != root_.filename().string()) {
        add("name", Severity::warning, "name_mismatch",
            "dataset name '" + ds.name + "' differs from its directory name",
            kMetadataFile);
      }
    } catch (const Error& e) {
      add("", Severity::error, e.code(), e.what(), kMetadataFile);
    }

    for (const std::string& series_dir : sorted_subdirs(root_)) {
      if (opts_.series_filter && !opts_.series_filter->contains(series_dir)) continue;
      ds.series.emplace(series_dir, load_series(series_dir));
    }

    // Cross-entity checks (key mismatches, annotation spans); per-file checks
    // already reported above keep their file tags.
    for (auto& issue : validate_dataset(ds)) {
      if (seen_.insert(issue.path + '\x1f' + issue.code).second) {
        issues_.push_back(std::move(issue));
      }
    }
    return ds;
  }

  Issues& issues() { return issues_; }

 private:
  IoStats* stats() const { return opts_.stats.get(); }

  void add(std::string path, Severity severity, std::string code,
           std::string message, const std::string& file) {
    if (!file.empty()) message += " [" + file + "]";
    seen_.insert(path + '\x1f' + code);
    issues_.push_back({std::move(path), severity, std::move(code), std::move(message)});
  }

  // Runs a per-entity validator and tags every new issue with `file`.
  template <typename Fn>
  void checked(const std::string& file, Fn&& fn) {
    Issues local;
    fn(local);
    for (auto& issue : local) {
      add(std::move(issue.path), issue.severity, std::move(issue.code),
          std::move(issue.message), file);
    }
  }

  Series load_series(const std::string& dir_name) {
    Series series;
    series.name = dir_name;
    const fs::path dir = root_ / dir_name;
    const std::string meta_file = dir_name + "/" + kMetadataFile;
    std::error_code ec;
    if (!fs::exists(dir / kMetadataFile, ec)) {
      add(dir_name, Severity::warning, "missing_file",
          "series has no metadata.json; using the directory name", meta_file);
    } else {
      try {
        series.name = json::series_name_from_json(read_json(dir / kMetadataFile, stats()));
      } catch (const Error& e) {
        add(dir_name, Severity::error, e.code(), e.what(), meta_file);
      }
    }
    for (const std::string& subject_dir : sorted_subdirs(dir)) {
      if (opts_.subject_filter && !opts_.subject_filter->contains(subject_dir)) continue;
      series.subjects.emplace(subject_dir, load_subject(dir_name, subject_dir));
    }
    return series;
  }

  Subject load_subject(const std::string& series_dir, const std::string& dir_name) {
    Subject subject;
    subject.metadata.subject_id = dir_name;
    const std::string prefix = series_dir + "/" + dir_name;
    const fs::path dir = root_ / series_dir / dir_name;
    const std::string meta_file = prefix + "/" + kMetadataFile;
    try {
      subject.metadata =
          json::subject_metadata_from_json(read_json(dir / kMetadataFile, stats()));
      checked(meta_file, [&](Issues& out) {
        validate_subject_metadata(subject.metadata, prefix, out);
      });
    } catch (const Error& e) {
      add(prefix, Severity::error, e.code(), e.what(), meta_file);
    }

    for (const std::string& array_dir : sorted_subdirs(dir)) {
      if (array_dir == kAnnotationsDir) continue;
      load_array(subject, prefix + "/" + array_dir, dir / array_dir);
    }

    const fs::path ann_dir = dir / kAnnotationsDir;
    std::error_code ec;
    if (fs::is_directory(ann_dir, ec)) {
      for (const fs::path& file : sorted_json_files(ann_dir)) {
        const std::string key = file.stem().string();
        const std::string rel = prefix + "/" + kAnnotationsDir + "/" + file.filename().string();
        const std::string path = prefix + "/" + kAnnotationsDir + "/" + key;
        try {
          AnnotationSet set = json::annotation_set_from_json(read_json(file, stats()));
          checked(rel, [&](Issues& out) { validate_annotation_set(set, path, out); });
          subject.annotations.emplace(key, std::move(set));
        } catch (const Error& e) {
          add(path, Severity::error, e.code(), e.what(), rel);
        }
      }
    }
    return subject;
  }

  void load_array(Subject& subject, const std::string& path, const fs::path& dir) {
    const std::string key = dir.filename().string();
    const std::string attrs_file = path + "/" + kAttributesFile;
    StoredArrayRef ref;
    try {
      ref = open_array(dir, stats());
    } catch (const Error& e) {
      const bool attrs_problem = e.code() == "bad_json" || e.code() == "schema_error" ||
                                 (e.code() == "missing_file" &&
                                  !fs::exists(dir / kAttributesFile));
      std::string file = attrs_problem ? attrs_file : path;
      if (!attrs_problem) {
        std::error_code ec;
        file += fs::is_directory(dir / kChunkedDataDir, ec)
                    ? std::string("/") + kChunkedDataDir
                    : std::string("/") + kRawDataFile;
      }
      add(path, Severity::error, e.code(), e.what(), file);
      return;
    }
    Issues attr_issues;
    validate_array_attributes(ref.attributes, path, attr_issues);
    checked(attrs_file, [&](Issues& out) { out = attr_issues; });
    if (has_errors(attr_issues)) return;
    const ArrayAttributes attrs = ref.attributes;
    if (opts_.lazy_arrays) {
      subject.sample_arrays.insert_or_assign(
          key, SampleArray(attrs, std::make_shared<StoredArraySource>(std::move(ref),
                                                                      opts_.stats)));
      return;
    }
    try {
      ArrayValues values = read_window(ref, 0, attrs.n_samples, stats());
      subject.sample_arrays.insert_or_assign(key, SampleArray(attrs, std::move(values)));
    } catch (const Error& e) {
      const std::string file =
          path + "/" + (ref.kind == CodecKind::raw ? kRawDataFile : kChunkedDataDir);
      add(path, Severity::error, e.code(), e.what(), file);
    }
  }

  fs::path root_;
  const ReadOptions& opts_;
  Issues issues_;
  std::unordered_set<std::string> seen_;
};

}  // namespace

Dataset read_dataset(const fs::path& root, const ReadOptions& opts) {
  Loader loader(root, opts);
  Dataset ds = loader.load();
  if (has_errors(loader.issues())) throw ValidationError(std::move(loader.issues()));
  return ds;
}

Issues check_dataset(const fs::path& root) {
  ReadOptions opts;
  opts.lazy_arrays = false;
  Loader loader(root, opts);
  try {
    loader.load();
  } catch (const Error& e) {
    if (e.code() == "not_slf_dataset") throw;
    loader.issues().push_back({"", Severity::error, e.code(), e.what()});
  }
  return std::move(loader.issues());
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

DatasetWriter::DatasetWriter(const fs::path& root, const std::string& dataset_name,
                             ArrayCodecSpec codec, bool overwrite,
                             const std::string& format_version)
    : codec_(codec) {
  codec_.validate();
  Issues issues;
  validate_entity_name(dataset_name, "name", issues);
  if (has_errors(issues)) throw ValidationError(std::move(issues));

  std::error_code ec;
  if (!fs::exists(root, ec) && !fs::create_directory(root, ec)) {
    throw Error("io_error", "cannot create " + root.string() + ": " + ec.message());
  }
  dataset_dir_ = root / dataset_name;
  if (fs::exists(dataset_dir_, ec)) {
    if (!overwrite) {
      throw Error("destination_exists", dataset_dir_.string() + " already exists");
    }
    fs::remove_all(dataset_dir_, ec);
    if (ec) throw Error("io_error", "cannot remove " + dataset_dir_.string());
  }
  if (!fs::create_directory(dataset_dir_, ec)) {
    throw Error("io_error", "cannot create " + dataset_dir_.string() + ": " + ec.message());
  }
  Dataset header;
  header.name = dataset_name;
  header.format_version = format_version;
  report_.total_bytes +=
      write_text(dataset_dir_ / kMetadataFile, json::dump(json::dataset_metadata(header)));
}

void DatasetWriter::add_series(const std::string& name) {
  Issues issues;
  validate_entity_name(name, name, issues);
  if (has_errors(issues)) throw ValidationError(std::move(issues));
  const fs::path dir = dataset_dir_ / name;
  std::error_code ec;
  if (!fs::create_directory(dir, ec)) {
    if (ec) throw Error("io_error", "cannot create " + dir.string() + ": " + ec.message());
    throw Error("destination_exists", dir.string() + " already exists");
  }
  Series s;
  s.name = name;
  const auto n = write_text(dir / kMetadataFile, json::dump(json::series_metadata(s)));
  std::lock_guard lock(mutex_);
  report_.series += 1;
  report_.total_bytes += n;
}

namespace {

std::string temp_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  return std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) +
         "-" + std::to_string(counter.fetch_add(1));
}

}  // namespace

void DatasetWriter::write_subject(const std::string& series, const Subject& subject) {
  const std::string& id = subject.metadata.subject_id;
  Issues issues;
  validate_subject(subject, series + "/" + id, issues);
  if (has_errors(issues)) throw ValidationError(std::move(issues));

  const fs::path series_dir = dataset_dir_ / series;
  std::error_code ec;
  if (!fs::is_directory(series_dir, ec)) {
    throw Error("invalid_argument", "series '" + series + "' was not added");
  }
  const fs::path final_dir = series_dir / id;
  if (fs::exists(final_dir, ec)) {
    throw Error("destination_exists", final_dir.string() + " already exists");
  }
  const fs::path tmp = series_dir / ("." + id + ".tmp-" + temp_suffix());
  std::uint64_t bytes = 0;
  try {
    fs::create_directory(tmp);
    bytes += write_text(tmp / kMetadataFile, json::dump(json::to_json(subject.metadata)));
    for (const auto& [key, array] : subject.sample_arrays) {
      const fs::path dir = tmp / key;
      fs::create_directory(dir);
      const ArrayAttributes& attrs = array.attributes();
      bytes += write_text(dir / kAttributesFile, json::dump(json::to_json(attrs)));
      const ArrayValues values = array.values();
      if (codec_.kind == CodecKind::raw) {
        bytes += write_bytes(dir / kRawDataFile, encode_raw_array(values, attrs.value_type));
      } else {
        const ChunkedArray chunked =
            encode_chunked_array(values, attrs.value_type,
                                 codec_.chunk_len_for(attrs.value_type), codec_.zstd_level);
        const fs::path zdir = dir / kChunkedDataDir;
        fs::create_directory(zdir);
        bytes += write_text(zdir / kZarrayFile, chunked.zarray);
        for (std::size_t i = 0; i < chunked.chunks.size(); ++i) {
          bytes += write_bytes(zdir / std::to_string(i), chunked.chunks[i]);
        }
      }
    }
    if (!subject.annotations.empty()) {
      const fs::path ann = tmp / kAnnotationsDir;
      fs::create_directory(ann);
      for (const auto& [key, set] : subject.annotations) {
        bytes += write_text(ann / (key + ".json"), json::dump(json::to_json(set)));
      }
    }
    fs::rename(tmp, final_dir);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(tmp, ec);
    throw Error("io_error", e.what());
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  std::lock_guard lock(mutex_);
  report_.subjects += 1;
  report_.arrays += subject.sample_arrays.size();
  report_.annotation_sets += subject.annotations.size();
  report_.total_bytes += bytes;
}

WriteReport DatasetWriter::report() const {
  std::lock_guard lock(mutex_);
  return report_;
}

WriteReport write_dataset(const Dataset& dataset, const fs::path& root,
                          const WriteOptions& opts) {
  opts.codec.validate();
  Issues issues = validate_dataset(dataset);
  if (has_errors(issues)) throw ValidationError(std::move(issues));

  DatasetWriter writer(root, dataset.name, opts.codec, opts.overwrite,
                       dataset.format_version);
  std::vector<std::pair<const std::string*, const Subject*>> tasks;
  for (const auto& [series_key, series] : dataset.series) {
    writer.add_series(series_key);
    for (const auto& [subject_key, subject] : series.subjects) {
      tasks.emplace_back(&series_key, &subject);
    }
  }

  detail::parallel_for(tasks.size(), opts.workers, [&](std::size_t i) {
    writer.write_subject(*tasks[i].first, *tasks[i].second);
  });
  return writer.report();
}

// ---------------------------------------------------------------------------
// Listing
// ---------------------------------------------------------------------------

std::size_t DatasetSummary::n_subjects() const {
  std::size_t n = 0;
  for (const auto& s : series) n += s.subjects.size();
  return n;
}

DatasetSummary list_dataset(const fs::path& root, IoStats* stats) {
  std::error_code ec;
  if (!fs::is_directory(root, ec) || !fs::is_regular_file(root / kMetadataFile, ec)) {
    throw Error("not_slf_dataset",
                root.string() + " is not a dataset directory (no metadata.json)");
  }
  DatasetSummary out;
  out.name = json::dataset_header_from_json(read_json(root / kMetadataFile, stats)).name;
  for (const std::string& series_dir : sorted_subdirs(root)) {
    SeriesSummary series;
    series.name = series_dir;
    if (fs::exists(root / series_dir / kMetadataFile, ec)) {
      series.name =
          json::series_name_from_json(read_json(root / series_dir / kMetadataFile, stats));
    }
    for (const std::string& subject_dir : sorted_subdirs(root / series_dir)) {
      const fs::path dir = root / series_dir / subject_dir;
      SubjectSummary subject;
      subject.subject_id =
          json::subject_metadata_from_json(read_json(dir / kMetadataFile, stats)).subject_id;
      for (const std::string& array_dir : sorted_subdirs(dir)) {
        if (array_dir == kAnnotationsDir) continue;
        const ArrayAttributes a = json::array_attributes_from_json(
            read_json(dir / array_dir / kAttributesFile, stats));
        subject.arrays.push_back(
            {a.name, a.n_samples, a.sampling_rate, a.value_type, a.start_offset});
      }
      if (fs::is_directory(dir / kAnnotationsDir, ec)) {
        for (const fs::path& file : sorted_json_files(dir / kAnnotationsDir)) {
          subject.annotation_sets.push_back(file.stem().string());
        }
      }
      series.subjects.push_back(std::move(subject));
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

namespace {

template <typename V>
std::vector<const std::pair<std::string, V>*> sorted_entries(const OrderedMap<V>& map) {
  std::vector<const std::pair<std::string, V>*> out;
  for (const auto& entry : map) out.push_back(&entry);
  std::sort(out.begin(), out.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  return out;
}

}  // namespace

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary out;
  out.name = dataset.name;
  for (const auto* series_entry : sorted_entries(dataset.series)) {
    SeriesSummary series;
    series.name = series_entry->second.name;
    for (const auto* subject_entry : sorted_entries(series_entry->second.subjects)) {
      const Subject& s = subject_entry->second;
      SubjectSummary subject;
      subject.subject_id = s.metadata.subject_id;
      for (const auto* array_entry : sorted_entries(s.sample_arrays)) {
        const ArrayAttributes& a = array_entry->second.attributes();
        subject.arrays.push_back(
            {a.name, a.n_samples, a.sampling_rate, a.value_type, a.start_offset});
      }
      for (const auto* set_entry : sorted_entries(s.annotations)) {
        subject.annotation_sets.push_back(set_entry->first);
      }
      series.subjects.push_back(std::move(subject));
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

std::uint64_t directory_size(const fs::path& dir) {
  std::uint64_t total = 0;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(dir, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file(ec)) total += it->file_size(ec);
  }
  if (ec) throw Error("io_error", "cannot walk " + dir.string() + ": " + ec.message());
  return total;
}

}  // namespace slf
