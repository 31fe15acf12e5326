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

#include "slf/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <type_traits>

namespace slf {

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

std::string_view to_string(ValueType type) {
  switch (type) {
    case ValueType::float32: return "float32";
    case ValueType::float64: return "float64";
    case ValueType::int16: return "int16";
    case ValueType::int32: return "int32";
  }
  return "unknown";
}

std::optional<ValueType> parse_value_type(std::string_view text) {
  if (text == "float32") return ValueType::float32;
  if (text == "float64") return ValueType::float64;
  if (text == "int16") return ValueType::int16;
  if (text == "int32") return ValueType::int32;
  return std::nullopt;
}

std::size_t item_size(ValueType type) {
  switch (type) {
    case ValueType::float32: return 4;
    case ValueType::float64: return 8;
    case ValueType::int16: return 2;
    case ValueType::int32: return 4;
  }
  return 0;
}

ValueType value_type_of(const ArrayValues& values) {
  return static_cast<ValueType>(values.index());
}

std::size_t size_of(const ArrayValues& values) {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

ArrayValues make_empty_values(ValueType type, std::size_t n) {
  switch (type) {
    case ValueType::float32: return std::vector<float>(n);
    case ValueType::float64: return std::vector<double>(n);
    case ValueType::int16: return std::vector<std::int16_t>(n);
    case ValueType::int32: return std::vector<std::int32_t>(n);
  }
  throw Error("invalid_value_type", "unknown value type");
}

bool bit_equal(const ArrayValues& a, const ArrayValues& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& va) {
        using Vec = std::decay_t<decltype(va)>;
        const auto& vb = std::get<Vec>(b);
        if (va.size() != vb.size()) return false;
        return va.empty() ||
               std::memcmp(va.data(), vb.data(),
                           va.size() * sizeof(typename Vec::value_type)) == 0;
      },
      a);
}

std::vector<double> to_double(const ArrayValues& values) {
  return std::visit(
      [](const auto& v) { return std::vector<double>(v.begin(), v.end()); },
      values);
}

// ---------------------------------------------------------------------------
// Timestamp
// ---------------------------------------------------------------------------

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day,
                                unsigned hour, unsigned minute,
                                unsigned second, std::int64_t micros) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
    throw Error("invalid_timestamp", "invalid calendar date or time");
  }
  Timestamp ts;
  ts.time = sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second} +
            microseconds{micros};
  return ts;
}

namespace {

bool parse_fixed_digits(std::string_view text, std::size_t pos,
                        std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

}  // namespace

Timestamp Timestamp::parse(std::string_view text) {
  const auto fail = [&]() -> Timestamp {
    throw Error("invalid_timestamp",
                "malformed timestamp '" + std::string(text) + "'");
  };
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (text.size() < 19 || !parse_fixed_digits(text, 0, 4, year) ||
      text[4] != '-' || !parse_fixed_digits(text, 5, 2, month) ||
      text[7] != '-' || !parse_fixed_digits(text, 8, 2, day) ||
      (text[10] != 'T' && text[10] != ' ') ||
      !parse_fixed_digits(text, 11, 2, hour) || text[13] != ':' ||
      !parse_fixed_digits(text, 14, 2, minute) || text[16] != ':' ||
      !parse_fixed_digits(text, 17, 2, second)) {
    return fail();
  }
  std::size_t pos = 19;
  std::int64_t micros = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    std::int64_t scale = 100000;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (digits < 6) {
        micros += (text[pos] - '0') * scale;
        scale /= 10;
      }
      ++digits;
      ++pos;
    }
    if (digits == 0 || digits > 9) return fail();
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) return fail();
  try {
    return from_civil(year, static_cast<unsigned>(month),
                      static_cast<unsigned>(day), static_cast<unsigned>(hour),
                      static_cast<unsigned>(minute),
                      static_cast<unsigned>(second), micros);
  } catch (const Error&) {
    return fail();
  }
}

std::string Timestamp::to_iso() const {
  using namespace std::chrono;
  const auto day_point = floor<days>(time);
  const year_month_day ymd{day_point};
  auto rest = time - day_point;
  const auto h = duration_cast<hours>(rest);
  rest -= h;
  const auto m = duration_cast<minutes>(rest);
  rest -= m;
  const auto s = duration_cast<seconds>(rest);
  rest -= s;
  char buf[48];
  int len = std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d",
                          static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()),
                          static_cast<unsigned>(ymd.day()),
                          static_cast<int>(h.count()),
                          static_cast<int>(m.count()),
                          static_cast<int>(s.count()));
  if (rest.count() != 0) {
    std::snprintf(buf + len, sizeof(buf) - len, ".%06lld",
                  static_cast<long long>(rest.count()));
  }
  return buf;
}

// ---------------------------------------------------------------------------
// SampleArray
// ---------------------------------------------------------------------------

SampleArray::SampleArray(ArrayAttributes attributes, ArrayValues values)
    : attributes_(std::move(attributes)),
      values_(std::make_shared<const ArrayValues>(std::move(values))) {}

SampleArray::SampleArray(ArrayAttributes attributes,
                         std::shared_ptr<const ArraySource> source)
    : attributes_(std::move(attributes)), source_(std::move(source)) {
  if (!source_) throw Error("invalid_argument", "null array source");
}

SampleArray SampleArray::from_values(std::string name, double sampling_rate,
                                     ArrayValues values,
                                     std::optional<std::string> unit,
                                     double start_offset) {
  ArrayAttributes attrs;
  attrs.name = std::move(name);
  attrs.sampling_rate = sampling_rate;
  attrs.unit = std::move(unit);
  attrs.value_type = value_type_of(values);
  attrs.n_samples = static_cast<std::int64_t>(size_of(values));
  attrs.start_offset = start_offset;
  return SampleArray(std::move(attrs), std::move(values));
}

ArrayValues SampleArray::values() const {
  if (source_) return source_->read(0, attributes_.n_samples);
  return *values_;
}

ArrayValues SampleArray::window(std::int64_t start, std::int64_t count) const {
  if (start < 0 || count < 0 || start + count > attributes_.n_samples) {
    throw Error("out_of_range", "window [" + std::to_string(start) + ", " +
                                    std::to_string(start + count) +
                                    ") outside array '" + attributes_.name +
                                    "' of " +
                                    std::to_string(attributes_.n_samples) +
                                    " samples");
  }
  if (source_) return source_->read(start, count);
  return std::visit(
      [&](const auto& v) -> ArrayValues {
        using Vec = std::decay_t<decltype(v)>;
        if (static_cast<std::int64_t>(v.size()) < start + count) {
          throw Error("length_mismatch", "array '" + attributes_.name +
                                             "' holds fewer samples than "
                                             "its attributes declare");
        }
        return Vec(v.begin() + start, v.begin() + start + count);
      },
      *values_);
}

SampleArray SampleArray::materialize() const {
  return SampleArray(attributes_, values());
}

bool SampleArray::operator==(const SampleArray& other) const {
  if (!(attributes_ == other.attributes_)) return false;
  if (!source_ && !other.source_ && values_ == other.values_) return true;
  return bit_equal(values(), other.values());
}

// ---------------------------------------------------------------------------
// Sleep stages
// ---------------------------------------------------------------------------

std::string_view to_string(SleepStage stage) {
  switch (stage) {
    case SleepStage::W: return "W";
    case SleepStage::N1: return "N1";
    case SleepStage::N2: return "N2";
    case SleepStage::N3: return "N3";
    case SleepStage::R: return "R";
  }
  return "?";
}

const std::vector<StageAlias>& sleep_stage_aliases() {
  static const std::vector<StageAlias> table = {
      {"w", SleepStage::W},
      {"n1", SleepStage::N1},
      {"n2", SleepStage::N2},
      {"n3", SleepStage::N3},
      {"r", SleepStage::R},
      {"wake", SleepStage::W},
      {"awake", SleepStage::W},
      {"rem", SleepStage::R},
      {"stage w", SleepStage::W},
      {"stage n1", SleepStage::N1},
      {"stage n2", SleepStage::N2},
      {"stage n3", SleepStage::N3},
      {"stage r", SleepStage::R},
      {"stage rem", SleepStage::R},
      {"sleep stage w", SleepStage::W},
      {"sleep stage n1", SleepStage::N1},
      {"sleep stage n2", SleepStage::N2},
      {"sleep stage n3", SleepStage::N3},
      {"sleep stage r", SleepStage::R},
      {"sleep stage rem", SleepStage::R},
      {"sleep stage 1", SleepStage::N1},
      {"sleep stage 2", SleepStage::N2},
      {"sleep stage 3", SleepStage::N3, true},
      {"sleep stage 4", SleepStage::N3, true},
      {"stage 1", SleepStage::N1},
      {"stage 2", SleepStage::N2},
      {"stage 3", SleepStage::N3, true},
      {"stage 4", SleepStage::N3, true},
  };
  return table;
}

namespace {

std::string normalize_label(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

}  // namespace

std::optional<StageAlias> match_sleep_stage(std::string_view text) {
  const std::string key = normalize_label(text);
  for (const auto& alias : sleep_stage_aliases()) {
    if (alias.text == key) return alias;
  }
  return std::nullopt;
}

SleepStage parse_sleep_stage(std::string_view text) {
  if (auto alias = match_sleep_stage(text)) return alias->stage;
  throw Error("unknown_label",
              "unknown sleep stage label '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Name type registry
// ---------------------------------------------------------------------------

namespace {

struct NameTypeRegistry {
  std::shared_mutex mutex;
  std::map<std::string, NamePredicate, std::less<>> predicates;

  NameTypeRegistry() {
    predicates.emplace(std::string(kFreeText),
                       [](std::string_view) { return true; });
    predicates.emplace(std::string(kAasmSleepStage), [](std::string_view n) {
      for (SleepStage s : kAllSleepStages) {
        if (to_string(s) == n) return true;
      }
      return false;
    });
  }
};

NameTypeRegistry& registry() {
  static NameTypeRegistry instance;
  return instance;
}

}  // namespace

void register_name_type(std::string name_type, NamePredicate predicate) {
  auto& reg = registry();
  std::unique_lock lock(reg.mutex);
  reg.predicates.insert_or_assign(std::move(name_type), std::move(predicate));
}

bool is_registered_name_type(std::string_view name_type) {
  auto& reg = registry();
  std::shared_lock lock(reg.mutex);
  return reg.predicates.find(name_type) != reg.predicates.end();
}

bool is_valid_annotation_name(std::string_view name_type,
                              std::string_view name) {
  auto& reg = registry();
  std::shared_lock lock(reg.mutex);
  auto it = reg.predicates.find(name_type);
  return it != reg.predicates.end() && it->second(name);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string_view to_string(Severity severity) {
  return severity == Severity::error ? "ERROR" : "WARNING";
}

bool has_errors(const Issues& issues) { return count_errors(issues) > 0; }

std::size_t count_errors(const Issues& issues) {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [](const auto& i) {
        return i.severity == Severity::error;
      }));
}

std::string format_issue(const ValidationIssue& issue) {
  std::string out(to_string(issue.severity));
  out += ' ';
  out += issue.path.empty() ? "." : issue.path;
  out += ' ';
  out += issue.code;
  out += ' ';
  out += issue.message;
  return out;
}

namespace {

std::string join_path(const std::string& prefix, std::string_view leaf) {
  if (prefix.empty()) return std::string(leaf);
  std::string out = prefix;
  out += '/';
  out += leaf;
  return out;
}

void add(Issues& out, std::string path, Severity severity, std::string code,
         std::string message) {
  out.push_back({std::move(path), severity, std::move(code),
                 std::move(message)});
}

template <typename V, typename NameOf>
void check_keys(const OrderedMap<V>& map, const std::string& prefix,
                NameOf name_of, Issues& out) {
  std::vector<std::string_view> seen;
  for (const auto& [key, value] : map) {
    const std::string& name = name_of(value);
    if (key != name) {
      add(out, join_path(prefix, key), Severity::error, "key_mismatch",
          "map key '" + key + "' does not match contained name '" + name +
              "'");
    }
    if (std::find(seen.begin(), seen.end(), name) != seen.end()) {
      add(out, join_path(prefix, key), Severity::error, "duplicate_name",
          "name '" + name + "' appears more than once");
    }
    seen.push_back(name);
  }
}

constexpr std::string_view kAnnotationsDirName = "annotations";
constexpr double kMaxAge = 150.0;
constexpr double kSuspiciousAge = 120.0;

}  // namespace

void validate_entity_name(std::string_view name, const std::string& path,
                          Issues& out) {
  if (name.empty()) {
    add(out, path, Severity::error, "empty_name", "name must be non-empty");
    return;
  }
  if (name.find('/') != std::string_view::npos ||
      name.find('\\') != std::string_view::npos || name == "." ||
      name == ".." || name.find('\0') != std::string_view::npos) {
    add(out, path, Severity::error, "invalid_name",
        "name '" + std::string(name) + "' is not usable as a directory name");
  }
}

void validate_subject_metadata(const SubjectMetadata& metadata,
                               const std::string& path, Issues& out) {
  validate_entity_name(metadata.subject_id, join_path(path, "subject_id"),
                       out);
  if (metadata.age) {
    const double age = *metadata.age;
    if (!std::isfinite(age) || age < 0.0 || age > kMaxAge) {
      add(out, join_path(path, "age"), Severity::error, "age_out_of_range",
          "age " + std::to_string(age) + " outside [0, 150]");
    } else if (age > kSuspiciousAge) {
      add(out, join_path(path, "age"), Severity::warning, "age_suspicious",
          "age " + std::to_string(age) + " exceeds 120 years");
    }
  }
}

void validate_array_attributes(const ArrayAttributes& attributes,
                               const std::string& path, Issues& out) {
  validate_entity_name(attributes.name, join_path(path, "name"), out);
  if (!std::isfinite(attributes.sampling_rate)) {
    add(out, join_path(path, "sampling_rate"), Severity::error,
        "non_finite_value", "sampling_rate must be finite");
  } else if (attributes.sampling_rate <= 0.0) {
    std::ostringstream msg;
    msg << "sampling_rate " << attributes.sampling_rate << " must be > 0";
    add(out, join_path(path, "sampling_rate"), Severity::error,
        "nonpositive_sampling_rate", msg.str());
  }
  if (attributes.n_samples < 0) {
    add(out, join_path(path, "n_samples"), Severity::error,
        "negative_n_samples",
        "n_samples " + std::to_string(attributes.n_samples) + " is negative");
  }
  if (!std::isfinite(attributes.start_offset)) {
    add(out, join_path(path, "start_offset"), Severity::error,
        "non_finite_value", "start_offset must be finite");
  }
}

void validate_annotation_set(const AnnotationSet& set, const std::string& path,
                             Issues& out) {
  validate_entity_name(set.name, join_path(path, "name"), out);
  const bool known_type = is_registered_name_type(set.name_type);
  if (!known_type) {
    add(out, join_path(path, "name_type"), Severity::error,
        "unknown_name_type",
        "annotation name type '" + set.name_type + "' is not registered");
  }
  for (std::size_t i = 0; i < set.annotations.size(); ++i) {
    const Annotation& a = set.annotations[i];
    const std::string apath =
        join_path(path, "annotations/" + std::to_string(i));
    if (!std::isfinite(a.start_sec) || !std::isfinite(a.duration_sec)) {
      add(out, apath, Severity::error, "non_finite_value",
          "annotation times must be finite");
      continue;
    }
    if (a.start_sec < 0.0) {
      add(out, join_path(apath, "start_sec"), Severity::error,
          "negative_start", "start_sec is negative");
    }
    if (a.duration_sec < 0.0) {
      add(out, join_path(apath, "duration_sec"), Severity::error,
          "negative_duration", "duration_sec is negative");
    }
    if (known_type && !is_valid_annotation_name(set.name_type, a.name)) {
      add(out, join_path(apath, "name"), Severity::error,
          "invalid_annotation_name",
          "'" + a.name + "' is not a valid " + set.name_type + " name");
    }
  }
}

namespace {

void validate_sample_array(const SampleArray& array, const std::string& path,
                           Issues& out) {
  validate_array_attributes(array.attributes(), path, out);
  if (array.is_lazy()) return;
  const ArrayValues values = array.values();
  if (value_type_of(values) != array.attributes().value_type) {
    add(out, join_path(path, "value_type"), Severity::error, "type_mismatch",
        "values are " + std::string(to_string(value_type_of(values))) +
            " but attributes declare " +
            std::string(to_string(array.attributes().value_type)));
  }
  const auto n = static_cast<std::int64_t>(size_of(values));
  if (n != array.attributes().n_samples) {
    add(out, join_path(path, "n_samples"), Severity::error, "length_mismatch",
        "values hold " + std::to_string(n) + " samples but attributes "
        "declare " + std::to_string(array.attributes().n_samples));
  }
}

}  // namespace

void validate_subject(const Subject& subject, const std::string& path,
                      Issues& out) {
  validate_subject_metadata(subject.metadata, path, out);
  check_keys(subject.sample_arrays, path,
             [](const SampleArray& a) -> const std::string& { return a.name(); },
             out);
  for (const auto& [key, array] : subject.sample_arrays) {
    validate_sample_array(array, join_path(path, key), out);
    if (array.name() == kAnnotationsDirName) {
      add(out, join_path(path, key), Severity::error, "invalid_name",
          "array name 'annotations' is reserved");
    }
  }
  const std::string ann_prefix = join_path(path, "annotations");
  check_keys(subject.annotations, ann_prefix,
             [](const AnnotationSet& s) -> const std::string& { return s.name; },
             out);

  std::optional<double> span;
  bool span_known = !subject.sample_arrays.empty();
  for (const auto& [key, array] : subject.sample_arrays) {
    if (!(array.attributes().sampling_rate > 0.0)) span_known = false;
  }
  if (span_known) span = recording_span(subject);

  for (const auto& [key, set] : subject.annotations) {
    const std::string set_path = join_path(ann_prefix, key);
    validate_annotation_set(set, set_path, out);
    if (!span) continue;
    for (std::size_t i = 0; i < set.annotations.size(); ++i) {
      const Annotation& a = set.annotations[i];
      if (a.start_sec + a.duration_sec > *span + 1e-9) {
        add(out, join_path(set_path, "annotations/" + std::to_string(i)),
            Severity::warning, "annotation_past_end",
            "annotation ends after the recording span");
      }
    }
  }
}

Issues validate_dataset(const Dataset& dataset) {
  Issues out;
  validate_entity_name(dataset.name, "name", out);
  check_keys(dataset.series, "",
             [](const Series& s) -> const std::string& { return s.name; }, out);
  for (const auto& [series_key, series] : dataset.series) {
    validate_entity_name(series.name, join_path(series_key, "name"), out);
    check_keys(series.subjects, series_key,
               [](const Subject& s) -> const std::string& {
                 return s.metadata.subject_id;
               },
               out);
    for (const auto& [subject_key, subject] : series.subjects) {
      validate_subject(subject, series_key + "/" + subject_key, out);
    }
  }
  return out;
}

namespace {

std::string summarize(const Issues& issues) {
  std::string msg = "validation failed with " +
                    std::to_string(count_errors(issues)) + " error(s)";
  for (const auto& issue : issues) {
    if (issue.severity != Severity::error) continue;
    msg += "\n  ";
    msg += format_issue(issue);
  }
  return msg;
}

}  // namespace

ValidationError::ValidationError(Issues issues)
    : Error("validation_failed", summarize(issues)),
      issues_(std::move(issues)) {}

double recording_span(const Subject& subject) {
  if (subject.sample_arrays.empty()) {
    throw Error("empty_subject", "subject '" + subject.metadata.subject_id +
                                     "' has no sample arrays");
  }
  double span = 0.0;
  for (const auto& [key, array] : subject.sample_arrays) {
    const auto& a = array.attributes();
    span = std::max(span, a.start_offset + a.duration_sec());
  }
  return span;
}

}  // namespace slf
