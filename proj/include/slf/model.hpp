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

// In-memory data model: Dataset > Series > Subject > {SampleArray,
// AnnotationSet}. Values are immutable once built and may be shared across
// threads; sample arrays are either materialized or backed by a lazy source.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "slf/error.hpp"

namespace slf {

enum class ValueType : std::uint8_t { float32, float64, int16, int32 };

std::string_view to_string(ValueType type);
std::optional<ValueType> parse_value_type(std::string_view text);
std::size_t item_size(ValueType type);

using ArrayValues = std::variant<std::vector<float>, std::vector<double>,
                                 std::vector<std::int16_t>,
                                 std::vector<std::int32_t>>;

ValueType value_type_of(const ArrayValues& values);
std::size_t size_of(const ArrayValues& values);
ArrayValues make_empty_values(ValueType type, std::size_t n = 0);
// Byte-level equality; distinguishes -0.0 from 0.0 and compares NaN payloads.
bool bit_equal(const ArrayValues& a, const ArrayValues& b);
std::vector<double> to_double(const ArrayValues& values);

// String-keyed map that iterates in insertion order. Keys are unique; the
// key is stored separately from the value so that a key/name mismatch is
// representable and can be reported by validation.
template <typename V>
class OrderedMap {
 public:
  using value_type = std::pair<std::string, V>;
  using iterator = typename std::vector<value_type>::iterator;
  using const_iterator = typename std::vector<value_type>::const_iterator;

  V& emplace(std::string key, V value) {
    if (contains(key)) {
      throw Error("duplicate_name", "duplicate key '" + key + "'");
    }
    entries_.emplace_back(std::move(key), std::move(value));
    return entries_.back().second;
  }

  void insert_or_assign(std::string key, V value) {
    if (V* existing = find(key)) {
      *existing = std::move(value);
    } else {
      entries_.emplace_back(std::move(key), std::move(value));
    }
  }

  bool erase(std::string_view key) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (it->first == key) {
        entries_.erase(it);
        return true;
      }
    }
    return false;
  }

  V* find(std::string_view key) {
    for (auto& [k, v] : entries_) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  const V* find(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const V& at(std::string_view key) const {
    if (const V* v = find(key)) return *v;
    throw Error("not_found", "no entry named '" + std::string(key) + "'");
  }
  V& at(std::string_view key) {
    if (V* v = find(key)) return *v;
    throw Error("not_found", "no entry named '" + std::string(key) + "'");
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  iterator begin() noexcept { return entries_.begin(); }
  iterator end() noexcept { return entries_.end(); }
  const_iterator begin() const noexcept { return entries_.begin(); }
  const_iterator end() const noexcept { return entries_.end(); }

  // Map equality: same keys with equal values, regardless of order.
  bool operator==(const OrderedMap& other) const {
    if (size() != other.size()) return false;
    for (const auto& [k, v] : entries_) {
      const V* o = other.find(k);
      if (o == nullptr || !(*o == v)) return false;
    }
    return true;
  }

 private:
  std::vector<value_type> entries_;
};

// Wall-clock instant with microsecond resolution, serialized as ISO-8601
// without a zone designator ("2023-04-01T22:13:05" or with ".ffffff").
struct Timestamp {
  std::chrono::sys_time<std::chrono::microseconds> time{};

  static Timestamp from_civil(int year, unsigned month, unsigned day,
                              unsigned hour = 0, unsigned minute = 0,
                              unsigned second = 0, std::int64_t micros = 0);
  // Throws Error("invalid_timestamp") on malformed input. Accepts a 'T' or
  // space separator, up to 9 fractional digits and an optional trailing 'Z'.
  static Timestamp parse(std::string_view text);
  std::string to_iso() const;

  auto operator<=>(const Timestamp&) const = default;
};

using Scalar =
    std::variant<std::monostate, bool, std::int64_t, double, std::string>;
using ScalarMap = OrderedMap<Scalar>;

struct SubjectMetadata {
  std::string subject_id;
  std::optional<Timestamp> recording_start;
  std::optional<double> age;
  std::optional<std::string> sex;
  ScalarMap extra;

  bool operator==(const SubjectMetadata&) const = default;
};

struct ArrayAttributes {
  std::string name;
  double sampling_rate = 0.0;
  std::optional<std::string> unit;
  ValueType value_type = ValueType::float32;
  std::int64_t n_samples = 0;
  // Seconds relative to SubjectMetadata::recording_start.
  double start_offset = 0.0;

  double duration_sec() const {
    return static_cast<double>(n_samples) / sampling_rate;
  }
  bool operator==(const ArrayAttributes&) const = default;
};

// Supplies sample values on demand. Implementations must be safe for
// concurrent calls.
class ArraySource {
 public:
  virtual ~ArraySource() = default;
  virtual ArrayValues read(std::int64_t start, std::int64_t count) const = 0;
};

class SampleArray {
 public:
  SampleArray(ArrayAttributes attributes, ArrayValues values);
  SampleArray(ArrayAttributes attributes,
              std::shared_ptr<const ArraySource> source);

  // Builds attributes from the values themselves (value type and count).
  static SampleArray from_values(std::string name, double sampling_rate,
                                 ArrayValues values,
                                 std::optional<std::string> unit = {},
                                 double start_offset = 0.0);

  const ArrayAttributes& attributes() const noexcept { return attributes_; }
  const std::string& name() const noexcept { return attributes_.name; }
  bool is_lazy() const noexcept { return source_ != nullptr; }

  // Whole array. Lazy arrays are read from their source on every call.
  ArrayValues values() const;
  // Samples [start, start + count); throws Error("out_of_range").
  ArrayValues window(std::int64_t start, std::int64_t count) const;
  // Returns a materialized copy of this array.
  SampleArray materialize() const;

  // Attribute equality plus bit-identical values.
  bool operator==(const SampleArray& other) const;

 private:
  ArrayAttributes attributes_;
  std::shared_ptr<const ArrayValues> values_;
  std::shared_ptr<const ArraySource> source_;
};

struct Annotation {
  std::string name;
  double start_sec = 0.0;
  double duration_sec = 0.0;
  ScalarMap extra;

  bool operator==(const Annotation&) const = default;
};

inline constexpr std::string_view kFreeText = "free_text";
inline constexpr std::string_view kAasmSleepStage = "aasm_sleep_stage";

struct AnnotationSet {
  std::string name;
  std::optional<std::string> scorer;
  std::string name_type{kFreeText};
  std::vector<Annotation> annotations;

  bool operator==(const AnnotationSet&) const = default;
};

struct Subject {
  SubjectMetadata metadata;
  OrderedMap<SampleArray> sample_arrays;
  OrderedMap<AnnotationSet> annotations;

  void add_array(SampleArray array) {
    std::string key = array.name();
    sample_arrays.emplace(std::move(key), std::move(array));
  }
  void add_annotation_set(AnnotationSet set) {
    std::string key = set.name;
    annotations.emplace(std::move(key), std::move(set));
  }
  bool operator==(const Subject&) const = default;
};

struct Series {
  std::string name;
  OrderedMap<Subject> subjects;

  void add_subject(Subject subject) {
    std::string key = subject.metadata.subject_id;
    subjects.emplace(std::move(key), std::move(subject));
  }
  bool operator==(const Series&) const = default;
};

inline constexpr std::string_view kFormatVersion = "1";

struct Dataset {
  std::string name;
  std::string format_version{kFormatVersion};
  OrderedMap<Series> series;

  void add_series(Series s) {
    std::string key = s.name;
    series.emplace(std::move(key), std::move(s));
  }
  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Sleep stages
// ---------------------------------------------------------------------------

enum class SleepStage : std::uint8_t { W, N1, N2, N3, R };

inline constexpr SleepStage kAllSleepStages[] = {
    SleepStage::W, SleepStage::N1, SleepStage::N2, SleepStage::N3,
    SleepStage::R};

std::string_view to_string(SleepStage stage);

struct StageAlias {
  std::string_view text;  // lowercase
  SleepStage stage;
  // True when the alias merges a finer legacy stage into a coarser one
  // (R&K stages 3 and 4 both become N3).
  bool collapsed = false;
};

// Case-insensitive alias table used by parse_sleep_stage. Includes the
// canonical forms and the Sleep-EDF "Sleep stage X" convention.
const std::vector<StageAlias>& sleep_stage_aliases();

std::optional<StageAlias> match_sleep_stage(std::string_view text);
// Throws Error("unknown_label") carrying the offending string.
SleepStage parse_sleep_stage(std::string_view text);

// ---------------------------------------------------------------------------
// Annotation name types
// ---------------------------------------------------------------------------

using NamePredicate = std::function<bool(std::string_view)>;

// Ships with free_text (any name) and aasm_sleep_stage (canonical stage
// names only). Registration is thread-safe; re-registering replaces.
void register_name_type(std::string name_type, NamePredicate predicate);
bool is_registered_name_type(std::string_view name_type);
// False for unregistered types.
bool is_valid_annotation_name(std::string_view name_type,
                              std::string_view name);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity : std::uint8_t { error, warning };
std::string_view to_string(Severity severity);

// Issue codes (closed set):
//   empty_name, invalid_name, key_mismatch, duplicate_name,
//   nonpositive_sampling_rate, negative_n_samples, non_finite_value,
//   age_out_of_range, age_suspicious (warning),
//   negative_start, negative_duration, invalid_annotation_name,
//   unknown_name_type, annotation_past_end (warning),
//   length_mismatch, type_mismatch
// plus the storage codes listed in slf/store.hpp.
struct ValidationIssue {
  std::string path;
  Severity severity = Severity::error;
  std::string code;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

using Issues = std::vector<ValidationIssue>;

bool has_errors(const Issues& issues);
std::size_t count_errors(const Issues& issues);
std::string format_issue(const ValidationIssue& issue);

// Depth-first, insertion-order traversal of the whole hierarchy. Lazy arrays
// are not materialized.
Issues validate_dataset(const Dataset& dataset);

// Per-entity checks used by validate_dataset and by the store while loading
// individual files. `path` is the slash-joined locator of the entity.
void validate_entity_name(std::string_view name, const std::string& path,
                          Issues& out);
void validate_subject_metadata(const SubjectMetadata& metadata,
                               const std::string& path, Issues& out);
void validate_array_attributes(const ArrayAttributes& attributes,
                               const std::string& path, Issues& out);
void validate_annotation_set(const AnnotationSet& set, const std::string& path,
                             Issues& out);
// Everything validate_dataset checks for one subject, including
// annotation_past_end warnings.
void validate_subject(const Subject& subject, const std::string& path,
                      Issues& out);

class ValidationError : public Error {
 public:
  explicit ValidationError(Issues issues);
  const Issues& issues() const noexcept { return issues_; }

 private:
  Issues issues_;
};

// Seconds covered by the subject's arrays: max of start_offset + duration.
// Throws Error("empty_subject") when the subject has no arrays.
double recording_span(const Subject& subject);

}  // namespace slf
