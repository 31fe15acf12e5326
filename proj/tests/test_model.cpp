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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "slf/model.hpp"
#include "test_util.hpp"

using namespace slf;

namespace {

Subject one_array_subject(const std::string& id = "s1") {
  Subject sub;
  sub.metadata.subject_id = id;
  sub.add_array(SampleArray::from_values("eeg", 64.0,
                                         std::vector<float>(640, 1.0f)));
  return sub;
}

Dataset one_subject_dataset() {
  Dataset ds;
  ds.name = "d";
  Series s;
  s.name = "a";
  s.add_subject(one_array_subject());
  ds.add_series(std::move(s));
  return ds;
}

Subject& only_subject(Dataset& ds) {
  return ds.series.at("a").subjects.at("s1");
}

std::vector<std::string> codes(const Issues& issues) {
  std::vector<std::string> out;
  for (const auto& i : issues) out.push_back(i.code);
  return out;
}

void replace_attributes(Subject& sub, const std::string& key,
                        const std::function<void(ArrayAttributes&)>& edit) {
  const SampleArray& old = sub.sample_arrays.at(key);
  ArrayAttributes attrs = old.attributes();
  edit(attrs);
  sub.sample_arrays.insert_or_assign(key, SampleArray(attrs, old.values()));
}

}  // namespace

TEST_CASE("empty dataset is valid") {
  Dataset ds;
  ds.name = "d";
  CHECK(validate_dataset(ds).empty());
}

TEST_CASE("valid one-subject dataset has no issues") {
  CHECK(validate_dataset(one_subject_dataset()).empty());
}

TEST_CASE("zero sampling rate is one error") {
  Dataset ds = one_subject_dataset();
  replace_attributes(only_subject(ds), "eeg",
                     [](ArrayAttributes& a) { a.sampling_rate = 0.0; });
  const Issues issues = validate_dataset(ds);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "nonpositive_sampling_rate");
  CHECK(issues[0].severity == Severity::error);
  CHECK(issues[0].path == "a/s1/eeg/sampling_rate");
}

TEST_CASE("N4 in a sleep stage set is an invalid annotation name") {
  Dataset ds = one_subject_dataset();
  AnnotationSet set;
  set.name = "hypnogram";
  set.name_type = std::string(kAasmSleepStage);
  set.annotations.push_back({"N4", 0.0, 5.0, {}});
  only_subject(ds).add_annotation_set(set);
  const Issues issues = validate_dataset(ds);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "invalid_annotation_name");
}

TEST_CASE("every canonical stage name is valid in a sleep stage set") {
  for (SleepStage s : kAllSleepStages) {
    CHECK(is_valid_annotation_name(kAasmSleepStage, to_string(s)));
  }
  CHECK_FALSE(is_valid_annotation_name(kAasmSleepStage, "N4"));
  CHECK_FALSE(is_valid_annotation_name(kAasmSleepStage, "REM"));
  CHECK(is_valid_annotation_name(kFreeText, "anything at all"));
  CHECK_FALSE(is_valid_annotation_name("no_such_type", "W"));
}

TEST_CASE("sleep stage enumeration has exactly five members") {
  CHECK(std::size(kAllSleepStages) == 5);
  const char* names[] = {"W", "N1", "N2", "N3", "R"};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(to_string(kAllSleepStages[i]) == names[i]);
  }
}

TEST_CASE("parse_sleep_stage examples") {
  CHECK(parse_sleep_stage("N2") == SleepStage::N2);
  CHECK(parse_sleep_stage("rem") == SleepStage::R);
  CHECK(parse_sleep_stage("Wake") == SleepStage::W);
  CHECK(parse_sleep_stage("Sleep stage N2") == SleepStage::N2);
  try {
    parse_sleep_stage("N4");
    FAIL("expected unknown_label");
  } catch (const Error& e) {
    CHECK(e.code() == "unknown_label");
    CHECK(std::string(e.what()).find("N4") != std::string::npos);
  }
}

TEST_CASE("parse_sleep_stage inverts to_string") {
  for (SleepStage s : kAllSleepStages) {
    CHECK(parse_sleep_stage(to_string(s)) == s);
  }
}

TEST_CASE("alias table parses under any letter case") {
  std::mt19937_64 rng(7);
  for (const StageAlias& alias : sleep_stage_aliases()) {
    std::string text(alias.text);
    CHECK(parse_sleep_stage(text) == alias.stage);
    std::string upper = text;
    for (char& c : upper) c = static_cast<char>(std::toupper(c));
    CHECK(parse_sleep_stage(upper) == alias.stage);
    for (int k = 0; k < 8; ++k) {
      std::string mixed = text;
      for (char& c : mixed) {
        if (rng() % 2) c = static_cast<char>(std::toupper(c));
      }
      CHECK(parse_sleep_stage(mixed) == alias.stage);
    }
  }
}

TEST_CASE("legacy stages 3 and 4 collapse into N3") {
  for (const char* text : {"Sleep stage 3", "Sleep stage 4"}) {
    const auto m = match_sleep_stage(text);
    REQUIRE(m.has_value());
    CHECK(m->stage == SleepStage::N3);
    CHECK(m->collapsed);
  }
  CHECK_FALSE(match_sleep_stage("Sleep stage 2")->collapsed);
  CHECK_FALSE(match_sleep_stage("Sleep stage ?").has_value());
}

TEST_CASE("registered name types validate through their predicate") {
  register_name_type("two_letters", [](std::string_view n) { return n.size() == 2; });
  CHECK(is_registered_name_type("two_letters"));
  CHECK(is_valid_annotation_name("two_letters", "ab"));
  CHECK_FALSE(is_valid_annotation_name("two_letters", "abc"));
}

TEST_CASE("recording_span examples") {
  Subject a = one_array_subject();
  CHECK(recording_span(a) == 10.0);

  Subject b;
  b.metadata.subject_id = "b";
  b.add_array(SampleArray::from_values("x", 1.0, std::vector<float>(10), {}, 0.0));
  b.add_array(SampleArray::from_values("y", 2.0, std::vector<float>(25), {}, 0.0));
  CHECK(recording_span(b) == 12.5);

  Subject c;
  c.metadata.subject_id = "c";
  c.add_array(SampleArray::from_values("x", 1.0, std::vector<float>(10), {}, 5.0));
  CHECK(recording_span(c) == 15.0);

  Subject empty;
  empty.metadata.subject_id = "e";
  try {
    recording_span(empty);
    FAIL("expected empty_subject");
  } catch (const Error& e) {
    CHECK(e.code() == "empty_subject");
  }
}

TEST_CASE("timestamps round-trip through ISO text") {
  const Timestamp t = Timestamp::from_civil(1999, 1, 2, 23, 15, 0);
  CHECK(t.to_iso() == "1999-01-02T23:15:00");
  CHECK(Timestamp::parse(t.to_iso()) == t);
  const Timestamp f = Timestamp::from_civil(2020, 2, 29, 0, 0, 1, 250000);
  CHECK(f.to_iso() == "2020-02-29T00:00:01.250000");
  CHECK(Timestamp::parse("2020-02-29 00:00:01.25Z") == f);
  CHECK_THROWS_AS(Timestamp::parse("2020-13-01T00:00:00"), Error);
  CHECK_THROWS_AS(Timestamp::parse("yesterday"), Error);
}

TEST_CASE("validate_dataset is deterministic") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    Dataset ds = testutil::random_dataset(rng, 200);
    ds.series.begin()->second.name = "renamed";
    const Issues first = validate_dataset(ds);
    CHECK_FALSE(first.empty());
    CHECK(validate_dataset(ds) == first);
  }
}

TEST_CASE("random valid datasets have no errors") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    CHECK_FALSE(has_errors(validate_dataset(testutil::random_dataset(rng, 100))));
  }
}

// One seeded mutation per type invariant, each detected with its code.
TEST_CASE("every invariant breach is detected") {
  struct Mutation {
    const char* code;
    std::function<void(Dataset&)> apply;
  };
  const std::vector<Mutation> mutations = {
      {"empty_name", [](Dataset& ds) { ds.name = ""; }},
      {"invalid_name", [](Dataset& ds) { ds.name = "a/b"; }},
      {"key_mismatch",
       [](Dataset& ds) { ds.series.at("a").name = "b"; }},
      {"key_mismatch",
       [](Dataset& ds) { only_subject(ds).metadata.subject_id = "s2"; }},
      {"invalid_name",
       [](Dataset& ds) {
         Subject sub = one_array_subject("x/y");
         ds.series.at("a").add_subject(sub);
       }},
      {"duplicate_name",
       [](Dataset& ds) {
         Subject& sub = only_subject(ds);
         sub.sample_arrays.emplace("other", sub.sample_arrays.at("eeg"));
       }},
      {"nonpositive_sampling_rate",
       [](Dataset& ds) {
         replace_attributes(only_subject(ds), "eeg",
                            [](ArrayAttributes& a) { a.sampling_rate = -64.0; });
       }},
      {"non_finite_value",
       [](Dataset& ds) {
         replace_attributes(only_subject(ds), "eeg", [](ArrayAttributes& a) {
           a.sampling_rate = std::numeric_limits<double>::infinity();
         });
       }},
      {"negative_n_samples",
       [](Dataset& ds) {
         replace_attributes(only_subject(ds), "eeg",
                            [](ArrayAttributes& a) { a.n_samples = -1; });
       }},
      {"length_mismatch",
       [](Dataset& ds) {
         replace_attributes(only_subject(ds), "eeg",
                            [](ArrayAttributes& a) { a.n_samples = 641; });
       }},
      {"type_mismatch",
       [](Dataset& ds) {
         replace_attributes(only_subject(ds), "eeg",
                            [](ArrayAttributes& a) { a.value_type = ValueType::int16; });
       }},
      {"age_out_of_range",
       [](Dataset& ds) { only_subject(ds).metadata.age = 151.0; }},
      {"age_out_of_range",
       [](Dataset& ds) { only_subject(ds).metadata.age = -1.0; }},
      {"invalid_name",
       [](Dataset& ds) {
         AnnotationSet set;
         set.name = "bad/set";
         only_subject(ds).add_annotation_set(set);
       }},
      {"negative_start",
       [](Dataset& ds) {
         AnnotationSet set;
         set.name = "ev";
         set.annotations.push_back({"x", -1.0, 1.0, {}});
         only_subject(ds).add_annotation_set(set);
       }},
      {"negative_duration",
       [](Dataset& ds) {
         AnnotationSet set;
         set.name = "ev";
         set.annotations.push_back({"x", 1.0, -1.0, {}});
         only_subject(ds).add_annotation_set(set);
       }},
      {"invalid_annotation_name",
       [](Dataset& ds) {
         AnnotationSet set;
         set.name = "hyp";
         set.name_type = std::string(kAasmSleepStage);
         set.annotations.push_back({"N4", 0.0, 30.0, {}});
         only_subject(ds).add_annotation_set(set);
       }},
      {"unknown_name_type",
       [](Dataset& ds) {
         AnnotationSet set;
         set.name = "ev";
         set.name_type = "nonexistent";
         only_subject(ds).add_annotation_set(set);
       }},
      {"key_mismatch",
       [](Dataset& ds) {
         AnnotationSet set;
         set.name = "ev";
         only_subject(ds).annotations.emplace("other", set);
       }},
  };
  for (const auto& m : mutations) {
    CAPTURE(m.code);
    Dataset ds = one_subject_dataset();
    m.apply(ds);
    const Issues issues = validate_dataset(ds);
    bool found = false;
    for (const auto& i : issues) {
      if (i.code == m.code && i.severity == Severity::error) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("suspicious but legal values are warnings") {
  Dataset ds = one_subject_dataset();
  only_subject(ds).metadata.age = 130.0;
  AnnotationSet set;
  set.name = "ev";
  set.annotations.push_back({"late", 9.0, 5.0, {}});
  only_subject(ds).add_annotation_set(set);
  const Issues issues = validate_dataset(ds);
  CHECK_FALSE(has_errors(issues));
  CHECK(codes(issues) == std::vector<std::string>{"age_suspicious", "annotation_past_end"});
}

TEST_CASE("issues come out depth-first in insertion order") {
  Dataset ds;
  ds.name = "d";
  for (const char* sname : {"z", "a"}) {
    Series s;
    s.name = sname;
    for (const char* id : {"s9", "s1"}) {
      Subject sub = one_array_subject(id);
      replace_attributes(sub, "eeg", [](ArrayAttributes& a) { a.sampling_rate = 0; });
      s.add_subject(sub);
    }
    ds.add_series(s);
  }
  std::vector<std::string> paths;
  for (const auto& i : validate_dataset(ds)) paths.push_back(i.path);
  CHECK(paths == std::vector<std::string>{
                     "z/s9/eeg/sampling_rate", "z/s1/eeg/sampling_rate",
                     "a/s9/eeg/sampling_rate", "a/s1/eeg/sampling_rate"});
}

TEST_CASE("ordered map keeps insertion order and compares as a map") {
  OrderedMap<int> a, b;
  a.emplace("x", 1);
  a.emplace("y", 2);
  b.emplace("y", 2);
  b.emplace("x", 1);
  CHECK(a == b);
  CHECK(a.begin()->first == "x");
  CHECK_THROWS_AS(a.emplace("x", 3), Error);
  b.insert_or_assign("x", 5);
  CHECK_FALSE(a == b);
  CHECK(b.erase("x"));
  CHECK_FALSE(b.erase("x"));
}

TEST_CASE("sample array equality is bitwise") {
  const float nan1 = std::bit_cast<float>(0x7fc00001u);
  const float nan2 = std::bit_cast<float>(0x7fc00002u);
  auto a = SampleArray::from_values("x", 1.0, std::vector<float>{nan1, 0.0f});
  auto b = SampleArray::from_values("x", 1.0, std::vector<float>{nan1, 0.0f});
  auto c = SampleArray::from_values("x", 1.0, std::vector<float>{nan2, 0.0f});
  auto d = SampleArray::from_values("x", 1.0, std::vector<float>{nan1, -0.0f});
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK_FALSE(a == d);
}

TEST_CASE("sample array windows") {
  auto a = SampleArray::from_values("x", 1.0, std::vector<std::int16_t>{1, 2, 3, 4});
  CHECK(std::get<std::vector<std::int16_t>>(a.window(1, 2)) ==
        std::vector<std::int16_t>{2, 3});
  CHECK_THROWS_AS(a.window(3, 2), Error);
  CHECK_THROWS_AS(a.window(-1, 1), Error);
}

TEST_CASE("format_issue layout") {
  const ValidationIssue issue{"a/s1/eeg/sampling_rate", Severity::error,
                              "nonpositive_sampling_rate", "must be positive"};
  CHECK(format_issue(issue) ==
        "ERROR a/s1/eeg/sampling_rate nonpositive_sampling_rate must be positive");
}
