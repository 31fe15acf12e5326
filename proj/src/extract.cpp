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

#include "slf/extract.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <type_traits>

#include "json_model.hpp"
#include "parallel.hpp"
#include "slf/error.hpp"

namespace slf {

namespace {

template <typename To, typename From>
To cast_one(From v) {
  if constexpr (std::is_floating_point_v<To>) {
    return static_cast<To>(v);
  } else {
    using Limits = std::numeric_limits<To>;
    if constexpr (std::is_floating_point_v<From>) {
      if (std::isnan(v)) throw Error("nan_to_int", "NaN cannot become an integer");
      const double r = std::round(static_cast<double>(v));
      if (r <= Limits::min()) return Limits::min();
      if (r >= Limits::max()) return Limits::max();
      return static_cast<To>(r);
    } else {
      const auto w = static_cast<std::int64_t>(v);
      if (w <= Limits::min()) return Limits::min();
      if (w >= Limits::max()) return Limits::max();
      return static_cast<To>(w);
    }
  }
}

template <typename To, typename From>
std::vector<To> cast_all(const std::vector<From>& in) {
  std::vector<To> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = cast_one<To>(in[i]);
  return out;
}

std::size_t reflect(std::int64_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (static_cast<std::int64_t>(n) - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::int64_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

[[noreturn]] void bad_config(const std::string& message) {
  throw Error("invalid_config", message);
}

std::set<std::string> string_set(const json::Json& v, const char* key) {
  if (!v.is_array()) bad_config(std::string(key) + " must be an array");
  std::set<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) bad_config(std::string(key) + " must hold strings");
    out.insert(item.get<std::string>());
  }
  return out;
}

ArrayCodecSpec codec_from_json(const json::Json& v) {
  if (!v.is_object()) bad_config("output_codec must be an object");
  ArrayCodecSpec spec;
  for (const auto& [key, value] : v.items()) {
    if (key == "kind") {
      const std::string kind = value.is_string() ? value.get<std::string>() : "";
      if (kind == "raw") {
        spec.kind = CodecKind::raw;
      } else if (kind == "chunked_zstd") {
        spec.kind = CodecKind::chunked_zstd;
      } else {
        bad_config("output_codec.kind must be \"raw\" or \"chunked_zstd\"");
      }
    } else if (key == "zstd_level") {
      if (!value.is_number_integer()) bad_config("zstd_level must be an integer");
      spec.zstd_level = value.get<int>();
    } else if (key == "chunk_len") {
      if (!value.is_number_integer()) bad_config("chunk_len must be an integer");
      spec.chunk_len = value.get<std::int64_t>();
    } else {
      bad_config("unknown output_codec key '" + key + "'");
    }
  }
  return spec;
}

ArraySelection selection_from_json(const json::Json& v) {
  if (!v.is_object()) bad_config("selections entries must be objects");
  ArraySelection sel;
  bool has_source = false;
  for (const auto& [key, value] : v.items()) {
    if (key == "source_name" || key == "new_name") {
      if (!value.is_string()) bad_config(key + " must be a string");
      if (key == "source_name") {
        sel.source_name = value.get<std::string>();
        has_source = true;
      } else {
        sel.new_name = value.get<std::string>();
      }
    } else if (key == "target_sampling_rate") {
      if (value.is_null()) continue;
      if (!value.is_number()) bad_config("target_sampling_rate must be a number");
      sel.target_sampling_rate = value.get<double>();
    } else if (key == "target_value_type") {
      if (value.is_null()) continue;
      auto t = value.is_string() ? parse_value_type(value.get<std::string>())
                                 : std::nullopt;
      if (!t) bad_config("unknown target_value_type");
      sel.target_value_type = t;
    } else {
      bad_config("unknown selection key '" + key + "'");
    }
  }
  if (!has_source) bad_config("selection without source_name");
  return sel;
}

struct PlannedArray {
  const SampleArray* source = nullptr;
  std::string name;
  int factor = 1;
  double sampling_rate = 0.0;
  std::optional<ValueType> value_type;
};

struct SubjectPlan {
  const std::string* series = nullptr;
  const Subject* subject = nullptr;
  std::vector<PlannedArray> arrays;
};

}  // namespace

std::vector<double> design_lowpass_fir(int factor) {
  if (factor < 2) {
    throw Error("invalid_factor", "filter design needs factor >= 2");
  }
  const int n = 10 * factor + 1;
  const int m = 5 * factor;
  const double fc = 0.45 / factor;
  constexpr double pi = std::numbers::pi;
  std::vector<double> taps(static_cast<std::size_t>(n));
  for (int j = 0; j <= m; ++j) {
    const double x = 2.0 * pi * fc * (j - m);
    const double sinc = j == m ? 1.0 : std::sin(x) / x;
    const double window = 0.54 - 0.46 * std::cos(2.0 * pi * j / (n - 1));
    taps[static_cast<std::size_t>(j)] = taps[static_cast<std::size_t>(n - 1 - j)] =
        2.0 * fc * sinc * window;
  }
  // Neumaier summation keeps the normalized sum within an ulp or two of 1.
  double sum = 0.0;
  double carry = 0.0;
  for (double t : taps) {
    const double s = sum + t;
    carry += std::fabs(sum) >= std::fabs(t) ? (sum - s) + t : (t - s) + sum;
    sum = s;
  }
  sum += carry;
  for (double& t : taps) t /= sum;
  return taps;
}

double fir_response(std::span<const double> taps, double freq) {
  std::complex<double> acc;
  for (std::size_t j = 0; j < taps.size(); ++j) {
    acc += taps[j] * std::polar(1.0, -2.0 * std::numbers::pi * freq *
                                         static_cast<double>(j));
  }
  return std::abs(acc);
}

std::vector<double> decimate(std::span<const double> values, int factor) {
  if (factor < 1) throw Error("invalid_factor", "decimation factor must be >= 1");
  if (factor == 1) return {values.begin(), values.end()};
  const std::size_t n = values.size();
  if (n == 0) return {};
  const std::vector<double> taps = design_lowpass_fir(factor);
  const std::int64_t half = 5 * factor;
  const std::size_t f = static_cast<std::size_t>(factor);
  std::vector<double> out((n + f - 1) / f);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::int64_t first = static_cast<std::int64_t>(k * f) - half;
    double acc = 0.0;
    if (first >= 0 && first + 2 * half < static_cast<std::int64_t>(n)) {
      const double* x = values.data() + first;
      for (std::size_t j = 0; j < taps.size(); ++j) acc += taps[j] * x[j];
    } else {
      for (std::size_t j = 0; j < taps.size(); ++j) {
        acc += taps[j] * values[reflect(first + static_cast<std::int64_t>(j), n)];
      }
    }
    out[k] = acc;
  }
  return out;
}

ArrayValues decimate(const ArrayValues& values, int factor) {
  if (factor == 1) return values;
  const std::vector<double> x = to_double(values);
  ArrayValues filtered{decimate(std::span<const double>(x), factor)};
  return cast_values(filtered, value_type_of(values));
}

ArrayValues cast_values(const ArrayValues& values, ValueType target) {
  return std::visit(
      [&](const auto& v) -> ArrayValues {
        switch (target) {
          case ValueType::float32: return cast_all<float>(v);
          case ValueType::float64: return cast_all<double>(v);
          case ValueType::int16: return cast_all<std::int16_t>(v);
          case ValueType::int32: return cast_all<std::int32_t>(v);
        }
        throw Error("unsupported_dtype", "unknown value type");
      },
      values);
}

int decimation_factor(double source_rate, double target_rate) {
  const std::string what = "cannot resample " + std::to_string(source_rate) +
                           " Hz to " + std::to_string(target_rate) +
                           " Hz by an integer factor";
  if (!(target_rate > 0.0) || !std::isfinite(target_rate) ||
      !(source_rate > 0.0)) {
    throw Error("non_integer_factor", what);
  }
  const double ratio = source_rate / target_rate;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || rounded > std::numeric_limits<int>::max() ||
      std::fabs(ratio - rounded) > 1e-9 * ratio) {
    throw Error("non_integer_factor", what);
  }
  return static_cast<int>(rounded);
}

void ExtractConfig::validate() const {
  if (selections.empty()) bad_config("selections must not be empty");
  for (const auto& sel : selections) {
    if (sel.source_name.empty()) bad_config("empty source_name");
    if (sel.source_name == kAllArrays && sel.new_name) {
      bad_config("\"*\" selections cannot be renamed");
    }
    if (sel.new_name) {
      Issues issues;
      validate_entity_name(*sel.new_name, "new_name", issues);
      if (has_errors(issues)) bad_config("invalid new_name '" + *sel.new_name + "'");
    }
    if (sel.target_sampling_rate &&
        !(*sel.target_sampling_rate > 0.0 &&
          std::isfinite(*sel.target_sampling_rate))) {
      bad_config("target_sampling_rate must be positive");
    }
  }
  if (dataset_name) {
    Issues issues;
    validate_entity_name(*dataset_name, "dataset_name", issues);
    if (has_errors(issues)) bad_config("invalid dataset_name '" + *dataset_name + "'");
  }
  output_codec.validate();
}

ExtractConfig ExtractConfig::from_json(std::string_view text) {
  json::Json doc;
  try {
    doc = json::parse(text);
  } catch (const Error& e) {
    bad_config(e.what());
  }
  if (!doc.is_object()) bad_config("config must be a JSON object");
  ExtractConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "series_filter") {
      if (!value.is_null()) cfg.series_filter = string_set(value, "series_filter");
    } else if (key == "subject_filter") {
      if (!value.is_null()) cfg.subject_filter = string_set(value, "subject_filter");
    } else if (key == "annotation_sets") {
      if (!value.is_null()) cfg.annotation_sets = string_set(value, "annotation_sets");
    } else if (key == "selections") {
      if (!value.is_array()) bad_config("selections must be an array");
      for (const auto& s : value) cfg.selections.push_back(selection_from_json(s));
    } else if (key == "output_codec") {
      cfg.output_codec = codec_from_json(value);
    } else if (key == "dataset_name") {
      if (!value.is_string()) bad_config("dataset_name must be a string");
      cfg.dataset_name = value.get<std::string>();
    } else {
      bad_config("unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExtractReport extract(const fs::path& src_root, const ExtractConfig& config,
                      const fs::path& dest_root) {
  config.validate();
  ReadOptions read_opts;
  read_opts.series_filter = config.series_filter;
  read_opts.subject_filter = config.subject_filter;
  const Dataset src = read_dataset(src_root, read_opts);
  const std::string name = config.dataset_name.value_or(src.name);

  std::error_code ec_dest;
  std::error_code ec_src;
  const fs::path dest_dir = fs::weakly_canonical(dest_root / name, ec_dest);
  const fs::path src_dir = fs::weakly_canonical(src_root, ec_src);
  if (!ec_dest && !ec_src && dest_dir == src_dir) {
    throw Error("destination_is_source",
                "extraction would overwrite its own source");
  }

  ExtractReport report;
  std::vector<SubjectPlan> plans;
  std::size_t planned = 0;
  for (const auto& [series_name, series] : src.series) {
    for (const auto& [subject_id, subject] : series.subjects) {
      SubjectPlan plan{&series_name, &subject, {}};
      std::set<std::string> names;
      const auto add = [&](const SampleArray& arr, const ArraySelection& sel,
                           std::string out_name) {
        PlannedArray p{&arr, std::move(out_name), 1,
                       arr.attributes().sampling_rate, sel.target_value_type};
        if (sel.target_sampling_rate) {
          p.factor = decimation_factor(arr.attributes().sampling_rate,
                                       *sel.target_sampling_rate);
          p.sampling_rate = *sel.target_sampling_rate;
        }
        if (!names.insert(p.name).second) {
          bad_config("selections produce array '" + p.name + "' twice");
        }
        plan.arrays.push_back(std::move(p));
      };
      for (const auto& sel : config.selections) {
        if (sel.source_name == kAllArrays) {
          for (const auto& [array_name, arr] : subject.sample_arrays) {
            add(arr, sel, array_name);
          }
        } else if (const SampleArray* arr =
                       subject.sample_arrays.find(sel.source_name)) {
          add(*arr, sel, sel.new_name.value_or(sel.source_name));
        } else {
          report.warnings.push_back(series_name + "/" + subject_id +
                                    ": selection_unsatisfied: no array '" +
                                    sel.source_name + "'");
        }
      }
      planned += plan.arrays.size();
      plans.push_back(std::move(plan));
    }
  }
  if (planned == 0) {
    throw Error("empty_selection", "no subject has any selected array");
  }

  DatasetWriter writer(dest_root, name, config.output_codec, config.overwrite,
                       src.format_version);
  for (const auto& [series_name, series] : src.series) writer.add_series(series_name);

  detail::parallel_for(plans.size(), config.workers, [&](std::size_t i) {
    const SubjectPlan& plan = plans[i];
    Subject out;
    out.metadata = plan.subject->metadata;
    for (const PlannedArray& p : plan.arrays) {
      ArrayValues values = decimate(p.source->values(), p.factor);
      if (p.value_type) values = cast_values(values, *p.value_type);
      const ArrayAttributes& a = p.source->attributes();
      out.add_array(SampleArray::from_values(p.name, p.sampling_rate,
                                             std::move(values), a.unit,
                                             a.start_offset));
    }
    for (const auto& [set_name, set] : plan.subject->annotations) {
      if (!config.annotation_sets || config.annotation_sets->contains(set_name)) {
        out.add_annotation_set(set);
      }
    }
    writer.write_subject(*plan.series, out);
  });

  report.dataset_dir = writer.dataset_dir();
  report.subjects_processed = plans.size();
  report.arrays_written = planned;
  for (const SubjectPlan& plan : plans) {
    for (const PlannedArray& p : plan.arrays) {
      if (p.factor > 1) {
        report.resampled.push_back({*plan.series,
                                    plan.subject->metadata.subject_id, p.name,
                                    p.factor});
      }
    }
  }
  return report;
}

}  // namespace slf
