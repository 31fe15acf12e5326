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

// JSON documents for model entities. Parsers throw Error("schema_error") on
// missing keys or wrong types.

#include <string>
#include <string_view>

#include <json.hpp>

#include "slf/model.hpp"

namespace slf::json {

using Json = nlohmann::ordered_json;

// 2-space indentation, trailing newline, invalid UTF-8 replaced.
std::string dump(const Json& doc);
// Throws Error("bad_json").
Json parse(std::string_view text);

Json to_json(const Scalar& value);
Scalar scalar_from_json(const Json& value);
Json to_json(const ScalarMap& map);
ScalarMap scalar_map_from_json(const Json& value);

Json dataset_metadata(const Dataset& dataset);
Json series_metadata(const Series& series);
Json to_json(const SubjectMetadata& metadata);
Json to_json(const ArrayAttributes& attributes);
Json to_json(const AnnotationSet& set);

struct DatasetHeader {
  std::string name;
  std::string format_version;
};
DatasetHeader dataset_header_from_json(const Json& doc);
std::string series_name_from_json(const Json& doc);
SubjectMetadata subject_metadata_from_json(const Json& doc);
ArrayAttributes array_attributes_from_json(const Json& doc);
AnnotationSet annotation_set_from_json(const Json& doc);

}  // namespace slf::json
