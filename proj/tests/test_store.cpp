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
#include <json.hpp>

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "slf/store.hpp"
#include "test_util.hpp"

using namespace slf;
using testutil::TempDir;

namespace {

Subject make_subject(const std::string& id, std::size_t n = 10) {
  Subject sub;
  sub.metadata.subject_id = id;
  sub.metadata.recording_start = Timestamp::from_civil(2021, 3, 4, 22, 0, 0);
  sub.metadata.age = 42.5;
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 0.25f * static_cast<float>(i);
  sub.add_array(SampleArray::from_values("eeg", 64.0, v, "uV"));
  AnnotationSet hyp;
  hyp.name = "hypnogram";
  hyp.name_type = std::string(kAasmSleepStage);
  hyp.annotations.push_back({"W", 0.0, 0.1, {}});
  sub.add_annotation_set(hyp);
  return sub;
}

Dataset make_dataset(int n_series, int n_subjects, std::size_t n = 10) {
  Dataset ds;
  ds.name = "d";
  for (int s = 0; s < n_series; ++s) {
    Series series;
    series.name = "series_" + std::to_string(s);
    for (int j = 0; j < n_subjects; ++j) {
      series.add_subject(make_subject("subj_0" + std::to_string(j + 1), n));
    }
    ds.add_series(series);
  }
  return ds;
}

std::vector<std::string> relative_files(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& [name, bytes] : testutil::snapshot(dir)) out.push_back(name);
  return out;
}

Dataset materialized(const Dataset& ds) {
  Dataset out;
  out.name = ds.name;
  out.format_version = ds.format_version;
  for (const auto& [sk, series] : ds.series) {
    Series s;
    s.name = series.name;
    for (const auto& [jk, subject] : series.subjects) {
      Subject sub = subject;
      sub.sample_arrays = {};
      for (const auto& [ak, array] : subject.sample_arrays) {
        sub.sample_arrays.emplace(ak, array.materialize());
      }
      s.subjects.emplace(jk, sub);
    }
    out.series.emplace(sk, s);
  }
  return out;
}

template <typename T>
std::string error_code_of(T&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

bool has_issue(const Issues& issues, const std::string& code) {
  for (const auto& i : issues) {
    if (i.code == code && i.severity == Severity::error) return true;
  }
  return false;
}

StoredArrayRef write_single_array(const fs::path& root, const ArrayValues& values,
                                  const ArrayCodecSpec& codec) {
  Dataset ds;
  ds.name = "one";
  Series s;
  s.name = "s";
  Subject sub;
  sub.metadata.subject_id = "x";
  sub.add_array(SampleArray::from_values("sig", 64.0, values));
  s.add_subject(sub);
  ds.add_series(s);
  write_dataset(ds, root, {codec});
  return open_array(root / "one" / "s" / "x" / "sig");
}

}  // namespace

TEST_CASE("empty dataset writes only its metadata") {
  TempDir tmp;
  Dataset ds;
  ds.name = "d";
  const WriteReport r = write_dataset(ds, tmp.path());
  CHECK(relative_files(tmp / "d") == std::vector<std::string>{"metadata.json"});
  CHECK(r.series == 0);
  CHECK(r.subjects == 0);
  CHECK(r.arrays == 0);
  CHECK(r.annotation_sets == 0);
  CHECK(r.total_bytes == directory_size(tmp / "d"));
  CHECK(read_dataset(tmp / "d") == ds);
}

TEST_CASE("raw layout of a one-subject dataset") {
  TempDir tmp;
  const WriteReport r = write_dataset(make_dataset(1, 1), tmp.path());
  CHECK(relative_files(tmp / "d") ==
        std::vector<std::string>{"metadata.json",
                                 "series_0/metadata.json",
                                 "series_0/subj_01/annotations/hypnogram.json",
                                 "series_0/subj_01/eeg/attributes.json",
                                 "series_0/subj_01/eeg/data.npy",
                                 "series_0/subj_01/metadata.json"});
  CHECK(r.series == 1);
  CHECK(r.subjects == 1);
  CHECK(r.arrays == 1);
  CHECK(r.annotation_sets == 1);
  CHECK(r.total_bytes == directory_size(tmp / "d"));
}

TEST_CASE("chunked layout with chunk_len 4 and 10 samples") {
  TempDir tmp;
  write_dataset(make_dataset(1, 1), tmp.path(), {ArrayCodecSpec::chunked(9, 4)});
  const auto files = relative_files(tmp / "d" / "series_0" / "subj_01" / "eeg");
  CHECK(files == std::vector<std::string>{"attributes.json", "data.zarr/.zarray",
                                          "data.zarr/0", "data.zarr/1", "data.zarr/2"});
}

TEST_CASE("JSON documents are 2-space indented and newline terminated") {
  TempDir tmp;
  std::mt19937_64 rng(21);
  write_dataset(testutil::random_dataset(rng, 50, "j"), tmp.path(),
                {ArrayCodecSpec::chunked()});
  int checked = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp / "j")) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    const std::string text = testutil::read_text(e.path());
    const auto doc = nlohmann::ordered_json::parse(text);
    CHECK(text == doc.dump(2) + "\n");
    ++checked;
  }
  CHECK(checked > 3);
}

TEST_CASE("attributes and annotation documents carry the documented keys") {
  TempDir tmp;
  write_dataset(make_dataset(1, 1), tmp.path());
  const fs::path sub = tmp / "d" / "series_0" / "subj_01";
  const auto attrs = nlohmann::json::parse(testutil::read_text(sub / "eeg" / "attributes.json"));
  std::set<std::string> keys;
  for (const auto& [k, v] : attrs.items()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"name", "sampling_rate", "unit", "value_type",
                                      "n_samples", "start_offset"});
  CHECK(attrs["sampling_rate"] == 64.0);
  CHECK(attrs["value_type"] == "float32");
  const auto ann = nlohmann::json::parse(
      testutil::read_text(sub / "annotations" / "hypnogram.json"));
  keys.clear();
  for (const auto& [k, v] : ann.items()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"name", "scorer", "name_type", "annotations"});
  keys.clear();
  for (const auto& [k, v] : ann["annotations"][0].items()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"name", "start_sec", "duration_sec", "extra"});
}

TEST_CASE("round trip of random datasets under both codecs") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 25; ++i) {
    const Dataset ds = testutil::random_dataset(rng, 3000, "rt" + std::to_string(i));
    for (const ArrayCodecSpec& codec :
         {ArrayCodecSpec::raw(), ArrayCodecSpec::chunked(1, 1 + rng() % 500)}) {
      TempDir tmp;
      write_dataset(ds, tmp.path(), {codec});
      ReadOptions eager;
      eager.lazy_arrays = false;
      const Dataset back = read_dataset(tmp / ds.name, eager);
      CHECK(back == ds);
      CHECK(materialized(read_dataset(tmp / ds.name)) == ds);
    }
  }
}

TEST_CASE("codecs agree on every window") {
  std::mt19937_64 rng(8);
  for (ValueType t : testutil::kAllTypes) {
    const ArrayValues v = testutil::random_values(rng, t, 2000);
    TempDir a, b;
    const auto raw = write_single_array(a.path(), v, ArrayCodecSpec::raw());
    const auto zst = write_single_array(b.path(), v, ArrayCodecSpec::chunked(3, 77));
    for (int k = 0; k < 50; ++k) {
      const std::int64_t start = static_cast<std::int64_t>(rng() % 2001);
      const std::int64_t count = static_cast<std::int64_t>(rng() % (2001 - start));
      const ArrayValues w = read_window(raw, start, count);
      CHECK(bit_equal(w, read_window(zst, start, count)));
      CHECK(size_of(w) == static_cast<std::size_t>(count));
    }
  }
}

TEST_CASE("concatenated windows of a partition equal the eager read") {
  std::mt19937_64 rng(77);
  const ArrayValues v = testutil::random_values(rng, ValueType::float64, 5000);
  for (const ArrayCodecSpec& codec : {ArrayCodecSpec::raw(), ArrayCodecSpec::chunked(5, 333)}) {
    TempDir tmp;
    const auto ref = write_single_array(tmp.path(), v, codec);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> joined;
      std::int64_t pos = 0;
      while (pos < 5000) {
        const std::int64_t len = std::min<std::int64_t>(5000 - pos, rng() % 900);
        const auto part = std::get<std::vector<double>>(read_window(ref, pos, len));
        joined.insert(joined.end(), part.begin(), part.end());
        pos += len;
      }
      CHECK(bit_equal(ArrayValues(joined), v));
    }
  }
}

TEST_CASE("raw window of an 8 h 64 Hz array reads at most 7808 bytes") {
  TempDir tmp;
  const std::size_t n = 1843200;
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(i);
  const auto ref = write_single_array(tmp.path(), v, ArrayCodecSpec::raw());
  IoStats stats;
  const auto w = std::get<std::vector<float>>(read_window(ref, 1000000, 1920, &stats));
  CHECK(stats.bytes_read <= 1920 * 4 + 128);
  CHECK(w.front() == 1000000.0f);
  CHECK(w.back() == 1001919.0f);

  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const std::int64_t count = static_cast<std::int64_t>(rng() % 20000);
    const std::int64_t start = static_cast<std::int64_t>(rng() % (n - count + 1));
    IoStats s;
    read_window(ref, start, count, &s);
    CHECK(s.bytes_read <= static_cast<std::uint64_t>(count) * 4 + 128);
  }
}

TEST_CASE("chunked windows open only overlapping chunks") {
  TempDir tmp;
  const std::int64_t n = 50000, c = 1024;
  std::vector<std::int16_t> v(n);
  for (std::int64_t i = 0; i < n; ++i) v[i] = static_cast<std::int16_t>(i * 7);
  const auto ref = write_single_array(tmp.path(), v, ArrayCodecSpec::chunked(9, c));
  const fs::path zarr = tmp / "one" / "s" / "x" / "sig" / "data.zarr";
  auto chunk_size = [&](std::int64_t i) { return fs::file_size(zarr / std::to_string(i)); };

  IoStats stats;
  read_window(ref, 1000, 50, &stats);
  CHECK(stats.files_opened == 2);
  CHECK(stats.bytes_read == chunk_size(0) + chunk_size(1));

  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    const std::int64_t count = 1 + static_cast<std::int64_t>(rng() % 5000);
    const std::int64_t start = static_cast<std::int64_t>(rng() % (n - count + 1));
    const std::int64_t first = start / c, last = (start + count - 1) / c;
    std::uint64_t expected = 0;
    for (std::int64_t i = first; i <= last; ++i) expected += chunk_size(i);
    IoStats s;
    const auto w = std::get<std::vector<std::int16_t>>(read_window(ref, start, count, &s));
    CHECK(s.files_opened == static_cast<std::uint64_t>(last - first + 1));
    CHECK(s.bytes_read == expected);
    CHECK(w[0] == v[start]);
  }
  IoStats none;
  CHECK(size_of(read_window(ref, 7, 0, &none)) == 0);
  CHECK(none.files_opened == 0);
}

TEST_CASE("window bounds are checked") {
  TempDir tmp;
  const auto ref = write_single_array(tmp.path(), std::vector<float>(10), ArrayCodecSpec::raw());
  CHECK(error_code_of([&] { read_window(ref, 5, 6); }) == "out_of_range");
  CHECK(error_code_of([&] { read_window(ref, -1, 1); }) == "out_of_range");
  CHECK(error_code_of([&] { read_window(ref, 0, -1); }) == "out_of_range");
  CHECK(size_of(read_window(ref, 10, 0)) == 0);
}

TEST_CASE("concurrent windowed reads of one array") {
  TempDir tmp;
  std::mt19937_64 rng(12);
  const ArrayValues v = testutil::random_values(rng, ValueType::int32, 100000);
  const auto ref = write_single_array(tmp.path(), v, ArrayCodecSpec::chunked(1, 4096));
  const auto& all = std::get<std::vector<std::int32_t>>(v);
  IoStats stats;
  std::atomic<int> mismatches{0};
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 local(t);
      for (int k = 0; k < 50; ++k) {
        const std::int64_t count = static_cast<std::int64_t>(local() % 10000);
        const std::int64_t start = static_cast<std::int64_t>(local() % (100000 - count + 1));
        const auto w = std::get<std::vector<std::int32_t>>(read_window(ref, start, count, &stats));
        if (!std::equal(w.begin(), w.end(), all.begin() + start)) ++mismatches;
      }
    });
  }
  threads.clear();
  CHECK(mismatches == 0);
  CHECK(stats.files_opened > 0);
}

TEST_CASE("lazy reads touch no payload until values are used") {
  TempDir tmp;
  write_dataset(make_dataset(1, 2, 5000), tmp.path(), {ArrayCodecSpec::chunked(9, 1000)});
  ReadOptions opts;
  opts.stats = std::make_shared<IoStats>();
  const Dataset ds = read_dataset(tmp / "d", opts);
  CHECK(opts.stats->payload_bytes_read == 0);
  const SampleArray& arr = ds.series.at("series_0").subjects.at("subj_01").sample_arrays.at("eeg");
  CHECK(arr.is_lazy());
  const auto w = std::get<std::vector<float>>(arr.window(2500, 10));
  CHECK(w[0] == 625.0f);
  CHECK(opts.stats->payload_bytes_read > 0);
  CHECK(opts.stats->payload_bytes_read ==
        fs::file_size(tmp / "d" / "series_0" / "subj_01" / "eeg" / "data.zarr" / "2"));
}

TEST_CASE("series and subject filters") {
  TempDir tmp;
  write_dataset(make_dataset(2, 3), tmp.path());
  ReadOptions opts;
  opts.subject_filter = std::set<std::string>{"subj_01"};
  const Dataset a = read_dataset(tmp / "d", opts);
  REQUIRE(a.series.size() == 2);
  for (const auto& [k, s] : a.series) {
    REQUIRE(s.subjects.size() == 1);
    CHECK(s.subjects.begin()->first == "subj_01");
  }
  opts.series_filter = std::set<std::string>{"series_1"};
  const Dataset b = read_dataset(tmp / "d", opts);
  REQUIRE(b.series.size() == 1);
  CHECK(b.series.begin()->first == "series_1");
}

TEST_CASE("tampered sampling rate fails the read and names the file") {
  TempDir tmp;
  write_dataset(make_dataset(1, 1), tmp.path());
  const fs::path attrs = tmp / "d" / "series_0" / "subj_01" / "eeg" / "attributes.json";
  std::string text = testutil::read_text(attrs);
  const auto pos = text.find("\"sampling_rate\": 64.0");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 21, "\"sampling_rate\": -64");
  testutil::write_text(attrs, text);
  try {
    read_dataset(tmp / "d");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.issues().size() == 1);
    CHECK(e.issues()[0].code == "nonpositive_sampling_rate");
    CHECK(e.issues()[0].message.find("series_0/subj_01/eeg/attributes.json") !=
          std::string::npos);
  }
  const Issues issues = check_dataset(tmp / "d");
  CHECK(count_errors(issues) == 1);
}

TEST_CASE("list_dataset reads only metadata") {
  TempDir tmp;
  std::mt19937_64 rng(31);
  const Dataset ds = testutil::random_dataset(rng, 2000, "ls");
  write_dataset(ds, tmp.path(), {ArrayCodecSpec::chunked()});
  IoStats stats;
  const DatasetSummary summary = list_dataset(tmp / "ls", &stats);
  CHECK(summary == summarize(ds));
  CHECK(stats.payload_bytes_read == 0);
  std::uint64_t json_bytes = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp / "ls")) {
    // Annotation set names come from the file names alone.
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().parent_path().filename() != "annotations") {
      json_bytes += e.file_size();
    }
  }
  CHECK(stats.bytes_read.load() == json_bytes);
}

TEST_CASE("list_dataset order and errors") {
  TempDir tmp;
  write_dataset(make_dataset(2, 3), tmp.path());
  const DatasetSummary s = list_dataset(tmp / "d");
  CHECK(s.n_subjects() == 6);
  std::vector<std::string> order;
  for (const auto& series : s.series) {
    for (const auto& sub : series.subjects) order.push_back(series.name + "/" + sub.subject_id);
  }
  CHECK(order == std::vector<std::string>{"series_0/subj_01", "series_0/subj_02",
                                          "series_0/subj_03", "series_1/subj_01",
                                          "series_1/subj_02", "series_1/subj_03"});
  fs::remove(tmp / "d" / "metadata.json");
  CHECK(error_code_of([&] { list_dataset(tmp / "d"); }) == "not_slf_dataset");
  CHECK(error_code_of([&] { read_dataset(tmp / "d"); }) == "not_slf_dataset");
  CHECK(error_code_of([&] { read_dataset(tmp / "nowhere"); }) == "not_slf_dataset");
}

TEST_CASE("existing destinations need the overwrite flag") {
  TempDir tmp;
  write_dataset(make_dataset(1, 1), tmp.path());
  CHECK(error_code_of([&] { write_dataset(make_dataset(1, 1), tmp.path()); }) ==
        "destination_exists");
  WriteOptions opts;
  opts.overwrite = true;
  CHECK_NOTHROW(write_dataset(make_dataset(1, 2), tmp.path(), opts));
  CHECK(read_dataset(tmp / "d").series.at("series_0").subjects.size() == 2);
}

TEST_CASE("invalid datasets are not written") {
  TempDir tmp;
  Dataset ds = make_dataset(1, 1);
  ds.series.at("series_0").subjects.at("subj_01").metadata.age = 200.0;
  CHECK_THROWS_AS(write_dataset(ds, tmp.path()), ValidationError);
  CHECK_FALSE(fs::exists(tmp / "d" / "series_0" / "subj_01"));
}

TEST_CASE("a failed subject write leaves no subject directory") {
  TempDir tmp;
  DatasetWriter writer(tmp.path(), "d", ArrayCodecSpec::raw());
  writer.add_series("s");
  Subject bad = make_subject("bad");
  bad.metadata.age = -3.0;
  CHECK_THROWS_AS(writer.write_subject("s", bad), ValidationError);
  writer.write_subject("s", make_subject("good"));
  std::vector<std::string> entries;
  for (const auto& e : fs::directory_iterator(tmp / "d" / "s")) {
    entries.push_back(e.path().filename().string());
  }
  std::sort(entries.begin(), entries.end());
  CHECK(entries == std::vector<std::string>{"good", "metadata.json"});
}

TEST_CASE("parallel writes produce the same tree as sequential ones") {
  std::mt19937_64 rng(99);
  const Dataset ds = testutil::random_dataset(rng, 4000, "par");
  TempDir a, b;
  write_dataset(ds, a.path(), {ArrayCodecSpec::chunked(3, 512), false, 1});
  write_dataset(ds, b.path(), {ArrayCodecSpec::chunked(3, 512), false, 4});
  CHECK(testutil::snapshot(a / "par") == testutil::snapshot(b / "par"));
}

TEST_CASE("storage corruptions are reported with their codes") {
  struct Case {
    const char* code;
    ArrayCodecSpec codec;
    std::function<void(const fs::path& array_dir)> corrupt;
  };
  const std::vector<Case> cases = {
      {"truncated_payload", ArrayCodecSpec::raw(),
       [](const fs::path& d) { fs::resize_file(d / "data.npy", 130); }},
      {"bad_magic", ArrayCodecSpec::raw(),
       [](const fs::path& d) {
         Bytes b = testutil::read_bytes(d / "data.npy");
         b[0] = 'X';
         testutil::write_bytes(d / "data.npy", b);
       }},
      {"shape_mismatch", ArrayCodecSpec::raw(),
       [](const fs::path& d) {
         testutil::write_bytes(d / "data.npy",
                               encode_raw_array(std::vector<float>(11), ValueType::float32));
       }},
      {"dtype_mismatch", ArrayCodecSpec::raw(),
       [](const fs::path& d) {
         testutil::write_bytes(d / "data.npy",
                               encode_raw_array(std::vector<double>(10), ValueType::float64));
       }},
      {"missing_file", ArrayCodecSpec::raw(),
       [](const fs::path& d) { fs::remove(d / "data.npy"); }},
      {"ambiguous_storage", ArrayCodecSpec::raw(),
       [](const fs::path& d) { fs::create_directory(d / "data.zarr"); }},
      {"bad_json", ArrayCodecSpec::raw(),
       [](const fs::path& d) { testutil::write_text(d / "attributes.json", "{\"name\": "); }},
      {"schema_error", ArrayCodecSpec::raw(),
       [](const fs::path& d) { testutil::write_text(d / "attributes.json", "{\"name\": 3}\n"); }},
      {"invalid_codec", ArrayCodecSpec::chunked(9, 4),
       [](const fs::path& d) {
         std::string z = testutil::read_text(d / "data.zarr" / ".zarray");
         const auto pos = z.find("\"level\": 9");
         z.replace(pos, 10, "\"level\": 23");
         testutil::write_text(d / "data.zarr" / ".zarray", z);
       }},
      {"corrupt_chunk", ArrayCodecSpec::chunked(9, 4),
       [](const fs::path& d) {
         Bytes b = testutil::read_bytes(d / "data.zarr" / "1");
         b.resize(b.size() - 3);
         testutil::write_bytes(d / "data.zarr" / "1", b);
       }},
      {"bad_json", ArrayCodecSpec::chunked(9, 4),
       [](const fs::path& d) { testutil::write_text(d / "data.zarr" / ".zarray", "[[["); }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.code);
    TempDir tmp;
    write_dataset(make_dataset(1, 1), tmp.path(), {c.codec});
    c.corrupt(tmp / "d" / "series_0" / "subj_01" / "eeg");
    CHECK(has_issue(check_dataset(tmp / "d"), c.code));
    ReadOptions eager;
    eager.lazy_arrays = false;
    try {
      read_dataset(tmp / "d", eager);
      FAIL_CHECK("read succeeded");
    } catch (const ValidationError& e) {
      CHECK(has_issue(e.issues(), c.code));
    }
  }
}

TEST_CASE("metadata corruptions are reported with their codes") {
  TempDir tmp;
  write_dataset(make_dataset(1, 2), tmp.path());
  const fs::path series = tmp / "d" / "series_0";
  testutil::write_text(series / "subj_01" / "metadata.json", "not json at all");
  // Directory name and stored name disagree.
  std::string meta = testutil::read_text(series / "subj_02" / "metadata.json");
  meta.replace(meta.find("subj_02"), 7, "subj_99");
  testutil::write_text(series / "subj_02" / "metadata.json", meta);
  const Issues issues = check_dataset(tmp / "d");
  CHECK(has_issue(issues, "bad_json"));
  CHECK(has_issue(issues, "key_mismatch"));
}

TEST_CASE("two array directories holding the same array name") {
  TempDir tmp;
  write_dataset(make_dataset(1, 1), tmp.path());
  const fs::path sub = tmp / "d" / "series_0" / "subj_01";
  fs::copy(sub / "eeg", sub / "eeg_copy", fs::copy_options::recursive);
  const Issues issues = check_dataset(tmp / "d");
  CHECK(has_issue(issues, "duplicate_name"));
  CHECK(has_issue(issues, "key_mismatch"));
}

TEST_CASE("stored N4 stage is rejected on read") {
  TempDir tmp;
  write_dataset(make_dataset(1, 1), tmp.path());
  const fs::path file = tmp / "d" / "series_0" / "subj_01" / "annotations" / "hypnogram.json";
  std::string text = testutil::read_text(file);
  text.replace(text.find("\"W\""), 3, "\"N4\"");
  testutil::write_text(file, text);
  CHECK(has_issue(check_dataset(tmp / "d"), "invalid_annotation_name"));
  CHECK_THROWS_AS(read_dataset(tmp / "d"), ValidationError);
}

TEST_CASE("missing series metadata is only a warning") {
  TempDir tmp;
  write_dataset(make_dataset(1, 1), tmp.path());
  fs::remove(tmp / "d" / "series_0" / "metadata.json");
  const Issues issues = check_dataset(tmp / "d");
  CHECK_FALSE(has_errors(issues));
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "missing_file");
  CHECK(read_dataset(tmp / "d").series.contains("series_0"));
}

TEST_CASE("absent chunks read as fill value") {
  TempDir tmp;
  const auto ref = write_single_array(tmp.path(), std::vector<float>(12, 3.0f),
                                      ArrayCodecSpec::chunked(9, 4));
  fs::remove(tmp / "one" / "s" / "x" / "sig" / "data.zarr" / "1");
  const auto v = std::get<std::vector<float>>(read_window(ref, 0, 12));
  CHECK(v == std::vector<float>{3, 3, 3, 3, 0, 0, 0, 0, 3, 3, 3, 3});
}
