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

#include "json_model.hpp"

namespace slf::json {

namespace {

[[noreturn]] void schema(const std::string& what) {
  throw Error("schema_error", what);
}

const Json& require(const Json& doc, const char* key) {
  if (!doc.is_object()) schema("expected a JSON object");
  auto it = doc.find(key);
  if (it == doc.end()) schema(std::string("missing key \"") + key + "\"");
  return *it;
}

std::string require_string(const Json& doc, const char* key) {
  const Json& v = require(doc, key);
  if (!v.is_string()) schema(std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

double require_number(const Json& doc, const char* key) {
  const Json& v = require(doc, key);
  if (!v.is_number()) schema(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

std::optional<std::string> optional_string(const Json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema(std::string("\"") + key + "\" must be a string or null");
  return it->get<std::string>();
}

std::optional<double> optional_number(const Json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) schema(std::string("\"") + key + "\" must be a number or null");
  return it->get<double>();
}

template <typename T>
Json nullable(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

std::string dump(const Json& doc) {
  return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) +
         "\n";
}

Json parse(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("bad_json", std::string("invalid JSON: ") + e.what());
  }
}

Json to_json(const Scalar& value) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return v;
        }
      },
      value);
}

Scalar scalar_from_json(const Json& value) {
  if (value.is_null()) return std::monostate{};
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return value.get<std::string>();
  schema("extra values must be scalars");
}

Json to_json(const ScalarMap& map) {
  Json out = Json::object();
  for (const auto& [k, v] : map) out[k] = to_json(v);
  return out;
}

ScalarMap scalar_map_from_json(const Json& value) {
  ScalarMap out;
  if (value.is_null()) return out;
  if (!value.is_object()) schema("\"extra\" must be an object");
  for (const auto& [k, v] : value.items()) out.emplace(k, scalar_from_json(v));
  return out;
}

Json dataset_metadata(const Dataset& dataset) {
  Json out;
  out["name"] = dataset.name;
  out["format_version"] = dataset.format_version;
  return out;
}

Json series_metadata(const Series& series) {
  Json out;
  out["name"] = series.name;
  return out;
}

Json to_json(const SubjectMetadata& metadata) {
  Json out;
  out["subject_id"] = metadata.subject_id;
  out["recording_start"] = metadata.recording_start
                               ? Json(metadata.recording_start->to_iso())
                               : Json(nullptr);
  out["age"] = nullable(metadata.age);
  out["sex"] = nullable(metadata.sex);
  out["extra"] = to_json(metadata.extra);
  return out;
}

Json to_json(const ArrayAttributes& attributes) {
  Json out;
  out["name"] = attributes.name;
  out["sampling_rate"] = attributes.sampling_rate;
  out["unit"] = nullable(attributes.unit);
  out["value_type"] = std::string(to_string(attributes.value_type));
  out["n_samples"] = attributes.n_samples;
  out["start_offset"] = attributes.start_offset;
  return out;
}

Json to_json(const AnnotationSet& set) {
  Json out;
  out["name"] = set.name;
  out["scorer"] = nullable(set.scorer);
  out["name_type"] = set.name_type;
  Json list = Json::array();
  for (const auto& a : set.annotations) {
    Json item;
    item["name"] = a.name;
    item["start_sec"] = a.start_sec;
    item["duration_sec"] = a.duration_sec;
    item["extra"] = to_json(a.extra);
    list.push_back(std::move(item));
  }
  out["annotations"] = std::move(list);
  return out;
}

DatasetHeader dataset_header_from_json(const Json& doc) {
  DatasetHeader out;
  out.name = require_string(doc, "name");
  out.format_version = require_string(doc, "format_version");
  return out;
}

std::string series_name_from_json(const Json& doc) {
  return require_string(doc, "name");
}

SubjectMetadata subject_metadata_from_json(const Json& doc) {
  SubjectMetadata out;
  out.subject_id = require_string(doc, "subject_id");
  if (auto start = optional_string(doc, "recording_start")) {
    try {
      out.recording_start = Timestamp::parse(*start);
    } catch (const Error& e) {
      schema(e.what());
    }
  }
  out.age = optional_number(doc, "age");
  out.sex = optional_string(doc, "sex");
  if (auto it = doc.find("extra"); it != doc.end()) {
    out.extra = scalar_map_from_json(*it);
  }
  return out;
}

ArrayAttributes array_attributes_from_json(const Json& doc) {
  ArrayAttributes out;
  out.name = require_string(doc, "name");
  out.sampling_rate = require_number(doc, "sampling_rate");
  out.unit = optional_string(doc, "unit");
  const std::string type = require_string(doc, "value_type");
  const auto vt = parse_value_type(type);
  if (!vt) schema("unsupported value_type \"" + type + "\"");
  out.value_type = *vt;
  const Json& n = require(doc, "n_samples");
  if (!n.is_number_integer()) schema("\"n_samples\" must be an integer");
  out.n_samples = n.get<std::int64_t>();
  out.start_offset = optional_number(doc, "start_offset").value_or(0.0);
  return out;
}

AnnotationSet annotation_set_from_json(const Json& doc) {
  AnnotationSet out;
  out.name = require_string(doc, "name");
  out.scorer = optional_string(doc, "scorer");
  out.name_type = require_string(doc, "name_type");
  const Json& list = require(doc, "annotations");
  if (!list.is_array()) schema("\"annotations\" must be an array");
  for (const Json& item : list) {
    Annotation a;
    a.name = require_string(item, "name");
    a.start_sec = require_number(item, "start_sec");
    a.duration_sec = require_number(item, "duration_sec");
    if (auto it = item.find("extra"); it != item.end()) {
      a.extra = scalar_map_from_json(*it);
    }
    out.annotations.push_back(std::move(a));
  }
  return out;
}

}  // namespace slf::json
