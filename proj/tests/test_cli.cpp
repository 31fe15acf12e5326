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
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "slf/bench.hpp"
#include "slf/cli.hpp"
#include "slf/store.hpp"
#include "test_util.hpp"

using namespace slf;
using testutil::TempDir;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run slf_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

fs::path edf_fixture(const std::string& name) {
  return testutil::golden("edf/" + name);
}

Dataset small_dataset() {
  Dataset ds;
  ds.name = "d";
  Series s;
  s.name = "a";
  Subject sub;
  sub.metadata.subject_id = "s1";
  std::vector<float> v(640);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) * 0.5f;
  sub.add_array(SampleArray::from_values("eeg", 64.0, v, "uV"));
  AnnotationSet hyp;
  hyp.name = "hypnogram";
  hyp.name_type = std::string(kAasmSleepStage);
  hyp.annotations.push_back({"W", 0.0, 10.0, {}});
  sub.add_annotation_set(hyp);
  s.add_subject(sub);
  ds.add_series(s);
  return ds;
}

Dataset three_subjects() {
  Dataset ds;
  ds.name = "src";
  Series s;
  s.name = "night";
  for (const char* id : {"a", "b", "c"}) {
    Subject sub;
    sub.metadata.subject_id = id;
    std::vector<float> v(6400);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<float>(std::sin(0.05 * static_cast<double>(i)));
    }
    sub.add_array(SampleArray::from_values("eeg", 64.0, v));
    s.add_subject(sub);
  }
  ds.add_series(s);
  return ds;
}

// Sequential sum in sample order, divided by the count.
double reference_mean(const ArrayValues& values) {
  const std::vector<double> d = to_double(values);
  double sum = 0.0;
  for (double x : d) sum += x;
  return sum / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(slf_cli({}).code == kExitEnvironmentFailure);
  CHECK(slf_cli({"frobnicate"}).code == kExitEnvironmentFailure);
  CHECK(slf_cli({"validate"}).code == kExitEnvironmentFailure);
  CHECK(slf_cli({"--help"}).code == kExitOk);
}

TEST_CASE("validate") {
  TempDir tmp;
  write_dataset(small_dataset(), tmp.path());
  const std::string dir = (tmp / "d").string();

  const Run ok = slf_cli({"validate", dir});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out == dir + ": 0 errors, 0 warnings\n");
  CHECK(slf_cli({"-q", "validate", dir}).out.empty());

  const Run js = slf_cli({"--json", "validate", dir});
  CHECK(js.code == kExitOk);
  const json j = json::parse(js.out);
  CHECK(j["valid"] == true);
  CHECK(j["errors"] == 0);
  CHECK(j["issues"].empty());

  const fs::path attrs = tmp / "d" / "a" / "s1" / "eeg" / "attributes.json";
  json a = json::parse(testutil::read_text(attrs));
  a["sampling_rate"] = -64.0;
  testutil::write_text(attrs, a.dump(2) + "\n");
  const Run bad = slf_cli({"validate", dir});
  CHECK(bad.code == kExitDomainFailure);
  int error_lines = 0;
  for (const auto& line : lines_of(bad.out)) {
    if (line.rfind("ERROR ", 0) == 0) {
      ++error_lines;
      CHECK(contains(line, "nonpositive_sampling_rate"));
      CHECK(contains(line, "a/s1/eeg"));
    }
  }
  CHECK(error_lines == 1);
  CHECK(contains(bad.out, ": 1 errors, 0 warnings"));
  const json jb = json::parse(slf_cli({"--json", "validate", dir}).out);
  CHECK(jb["valid"] == false);
  CHECK(jb["issues"][0]["code"] == "nonpositive_sampling_rate");

  CHECK(slf_cli({"validate", (tmp / "missing").string()}).code ==
        kExitEnvironmentFailure);
}

TEST_CASE("info summarizes from metadata") {
  TempDir tmp;
  write_dataset(small_dataset(), tmp.path(), {ArrayCodecSpec::chunked()});
  const std::string dir = (tmp / "d").string();

  const Run r = slf_cli({"info", dir});
  CHECK(r.code == kExitOk);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() >= 5);
  CHECK(lines[0] == "dataset d: 1 series, 1 subjects");
  CHECK(lines[1] == "series a: 1 subjects");
  CHECK(lines[2] == "  subject s1");
  CHECK(contains(lines[3], "array eeg"));
  CHECK(contains(lines[3], "64 Hz"));
  CHECK(contains(lines[3], "640 samples"));
  CHECK(contains(lines[3], "float32"));
  CHECK(lines[4] == "    annotations hypnogram");

  const json j = json::parse(slf_cli({"--json", "info", dir}).out);
  std::uint64_t json_bytes = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().parent_path().filename() != "annotations") {
      json_bytes += e.file_size();
    }
  }
  CHECK(j["bytes_read"].get<std::uint64_t>() == json_bytes);

  write_dataset(Dataset{"empty", std::string(kFormatVersion), {}}, tmp.path());
  const Run e = slf_cli({"info", (tmp / "empty").string()});
  CHECK(e.code == kExitOk);
  CHECK(contains(e.out, "0 series"));

  CHECK(slf_cli({"info", tmp.path().string()}).code == kExitEnvironmentFailure);
}

TEST_CASE("convert") {
  TempDir tmp;
  const fs::path src = tmp / "edfs";
  fs::create_directories(src);
  for (const char* f : {"two_signal.edf", "edf_plus.edf", "unknown_count.edf"}) {
    fs::copy_file(edf_fixture(f), src / f);
  }
  const Run r = slf_cli({"convert", src.string(), (tmp / "out").string(),
                         "--dataset", "night", "--codec", "raw"});
  CHECK(r.code == kExitOk);
  CHECK(contains(r.out, "converted 3 of 3 files"));
  CHECK(contains(r.out, "conversion time: "));
  const DatasetSummary s = list_dataset(tmp / "out" / "night");
  REQUIRE(s.series.size() == 1);
  CHECK(s.series[0].subjects.size() == 3);
  CHECK(slf_cli({"validate", (tmp / "out" / "night").string()}).code == kExitOk);

  // Existing destination.
  CHECK(slf_cli({"convert", src.string(), (tmp / "out").string(), "--dataset",
                 "night"})
            .code == kExitDomainFailure);

  const Run js = slf_cli({"--json", "convert", src.string(), (tmp / "z").string(),
                          "--codec", "zstd", "--level", "3", "--workers", "2"});
  CHECK(js.code == kExitOk);
  const json j = json::parse(js.out);
  CHECK(j["converted"] == 3);
  CHECK(j["skipped"].empty());

  CHECK(slf_cli({"convert", src.string(), (tmp / "bad").string(), "--codec",
                 "zstd", "--level", "23"})
            .code == kExitEnvironmentFailure);
  CHECK(!fs::exists(tmp / "bad"));

  fs::copy_file(edf_fixture("truncated.edf"), src / "truncated.edf");
  const Run strict = slf_cli({"convert", src.string(), (tmp / "strict").string(),
                              "--mode", "strict"});
  CHECK(strict.code == kExitDomainFailure);
  CHECK(contains(strict.err, "error: "));

  const Run lenient = slf_cli({"convert", src.string(), (tmp / "len").string()});
  CHECK(lenient.code == kExitOk);
  CHECK(contains(lenient.out, "converted 4 of 4 files"));
}

TEST_CASE("extract") {
  TempDir tmp;
  write_dataset(three_subjects(), tmp / "in");
  const std::string src = (tmp / "in" / "src").string();

  const fs::path identity = tmp / "identity.json";
  testutil::write_text(identity, R"({"selections": [{"source_name": "*"}]})");
  const Run r = slf_cli({"extract", identity.string(), src, (tmp / "out").string()});
  CHECK(r.code == kExitOk);
  CHECK(contains(r.out, "extracted 3 subjects, 3 arrays"));
  CHECK(slf_cli({"validate", (tmp / "out" / "src").string()}).code == kExitOk);
  ReadOptions eager;
  eager.lazy_arrays = false;
  CHECK(read_dataset(tmp / "out" / "src", eager) == read_dataset(src, eager));

  const fs::path odd = tmp / "odd.json";
  testutil::write_text(odd, R"({"selections": [{"source_name": "eeg",
      "target_sampling_rate": 50}]})");
  const Run bad = slf_cli({"extract", odd.string(), src, (tmp / "odd").string()});
  CHECK(bad.code == kExitDomainFailure);
  CHECK(contains(bad.err, "non_integer_factor"));
  CHECK(!fs::exists(tmp / "odd" / "src"));

  const fs::path one = tmp / "one.json";
  testutil::write_text(one, R"({"subject_filter": ["b"], "dataset_name": "just_b",
      "selections": [{"source_name": "eeg", "new_name": "eeg_16",
      "target_sampling_rate": 16}]})");
  const Run sub = slf_cli({"extract", one.string(), src, (tmp / "one").string()});
  CHECK(sub.code == kExitOk);
  CHECK(contains(sub.out, "resampled night/b/eeg_16 by 4"));
  const DatasetSummary s = list_dataset(tmp / "one" / "just_b");
  REQUIRE(s.series.size() == 1);
  REQUIRE(s.series[0].subjects.size() == 1);
  CHECK(s.series[0].subjects[0].subject_id == "b");

  const fs::path broken = tmp / "broken.json";
  testutil::write_text(broken, "{not json");
  CHECK(slf_cli({"extract", broken.string(), src, (tmp / "x").string()}).code ==
        kExitDomainFailure);
}

TEST_CASE("synthetic generator") {
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.duration_sec = 95.0;
  spec.seed = 7;
  spec.channels = {{"eeg", 64.0, SignalKind::int16_quantized},
                   {"noise", 32.0, SignalKind::gaussian_noise},
                   {"alpha", 16.0, SignalKind::sine_plus_noise}};
  const Dataset a = generate_synthetic_dataset(spec);
  CHECK(a == generate_synthetic_dataset(spec));
  CHECK(spec.total_samples() == 2u * (95u * 64u + 95u * 32u + 95u * 16u));
  CHECK(validate_dataset(a).empty());

  const Series& series = *a.series.find("synthetic");
  REQUIRE(series.subjects.size() == 2);
  const Subject& s1 = *series.subjects.find("sub-001");
  CHECK(series.subjects.find("sub-002") != nullptr);
  CHECK(s1.sample_arrays.find("eeg")->attributes().n_samples == 95 * 64);

  const AnnotationSet& hyp = *s1.annotations.find("hypnogram");
  REQUIRE(hyp.annotations.size() == 4);
  const char* cycle[] = {"W", "N1", "N2", "N3", "R"};
  for (std::size_t i = 0; i < hyp.annotations.size(); ++i) {
    CHECK(hyp.annotations[i].name == cycle[i % 5]);
    CHECK(hyp.annotations[i].start_sec == 30.0 * static_cast<double>(i));
    CHECK(hyp.annotations[i].duration_sec == (i < 3 ? 30.0 : 5.0));
  }

  // Quantized samples sit on the int16 calibration grid.
  const auto q = std::get<std::vector<float>>(s1.sample_arrays.find("eeg")->values());
  double sum_sq = 0.0;
  for (float v : q) {
    const double d = static_cast<double>(v) / kQuantizationGain;
    CHECK(std::abs(d - std::round(d)) <= 1e-4);
    CHECK(std::abs(d) <= 32768.0);
    sum_sq += std::round(d) * std::round(d);
  }
  const double sigma = std::sqrt(sum_sq / static_cast<double>(q.size()));
  CHECK(sigma == doctest::Approx(kQuantizationSigma).epsilon(0.05));

  SynthSpec other = spec;
  other.seed = 8;
  CHECK(!(generate_synthetic_dataset(other) == a));

  SynthSpec bad = spec;
  bad.channels.push_back({"eeg", 64.0, SignalKind::gaussian_noise});
  CHECK_THROWS_AS(generate_synthetic_dataset(bad), Error);
  bad = spec;
  bad.n_subjects = 0;
  CHECK_THROWS_AS(generate_synthetic_dataset(bad), Error);
  CHECK(parse_signal_kind("int16_quantized") == SignalKind::int16_quantized);
  CHECK(!parse_signal_kind("pink"));
}

TEST_CASE("bench report, CSV and means") {
  TempDir tmp;
  const fs::path work = tmp / "work";
  const Run r = slf_cli({"bench", "--work-dir", work.string(), "--subjects", "2",
                         "--duration", "120", "--channels", "2", "--rate", "128",
                         "--seed", "3", "--keep"});
  REQUIRE(r.code == kExitOk);

  const auto csv = lines_of(testutil::read_text(work / "bench.csv"));
  REQUIRE(csv.size() == 4);
  CHECK(csv[0] == kBenchCsvHeader);
  std::map<std::string, std::vector<std::string>> rows;
  for (std::size_t i = 1; i < csv.size(); ++i) {
    const auto cells = split(csv[i], ',');
    REQUIRE(cells.size() == 7);
    rows[cells[0]] = cells;
  }
  REQUIRE(rows.count("slf-raw") == 1);
  REQUIRE(rows.count("slf-zstd9") == 1);
  REQUIRE(rows.count("slf-zstd22") == 1);
  const auto size = [&](const char* f) { return std::stoull(rows[f][3]); };
  CHECK(size("slf-zstd22") <= size("slf-zstd9"));
  CHECK(size("slf-zstd9") < size("slf-raw"));

  // Every table row carries the CSV cells verbatim.
  const auto table = lines_of(r.out);
  const auto means_at = std::find(table.begin(), table.end(), "means");
  REQUIRE(means_at != table.end());
  for (const auto& [format, cells] : rows) {
    bool found = false;
    for (auto line_it = table.begin(); line_it != means_at; ++line_it) {
      const std::string& line = *line_it;
      if (line.rfind(format + " ", 0) != 0) continue;
      found = true;
      std::istringstream words(line);
      std::vector<std::string> got;
      for (std::string w; words >> w;) got.push_back(w);
      REQUIRE(got.size() == 7);
      CHECK(got[0] == cells[0]);
      for (std::size_t i = 3; i < 7; ++i) CHECK(got[i] == cells[i]);
    }
    CHECK(found);
  }

  // Printed means equal a fresh eager read of each kept dataset.
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.duration_sec = 120;
  spec.seed = 3;
  spec.channels = {{"ch1", 128.0, SignalKind::int16_quantized},
                   {"ch2", 128.0, SignalKind::int16_quantized}};
  const Dataset generated = generate_synthetic_dataset(spec);
  int checked = 0;
  ReadOptions eager;
  eager.lazy_arrays = false;
  for (auto it = means_at + 1; it != table.end(); ++it) {
    std::istringstream words(*it);
    std::string format, array, mean_text;
    words >> format >> array >> mean_text;
    const auto parts = split(array, '/');
    REQUIRE(parts.size() == 3);
    const Dataset kept = read_dataset(work / format / "synthetic", eager);
    CHECK(kept == generated);
    const ArrayValues v = kept.series.find(parts[0])
                              ->subjects.find(parts[1])
                              ->sample_arrays.find(parts[2])
                              ->values();
    CHECK(std::strtod(mean_text.c_str(), nullptr) == reference_mean(v));
    CHECK(array_mean(v) == reference_mean(v));
    ++checked;
  }
  CHECK(checked == 3 * 4);

  const Run js = slf_cli({"--json", "bench", "--work-dir", (tmp / "w2").string(),
                          "--subjects", "1", "--duration", "60", "--channel",
                          "x:100:gaussian_noise", "--channel", "y:50:sine_plus_noise",
                          "--seed", "3", "--cold"});
  REQUIRE(js.code == kExitOk);
  const json j = json::parse(js.out);
  CHECK(j["cold"] == true);
  REQUIRE(j["rows"].size() == 3);
  for (const auto& row : j["rows"]) {
    CHECK(row["means"].size() == 2);
    CHECK(row["read_time_s"].get<double>() > 0.0);
  }
  CHECK(!fs::exists(tmp / "w2" / "slf-raw"));

  CHECK(slf_cli({"bench", "--work-dir", (tmp / "w3").string(), "--channel",
                 "bad"})
            .code == kExitDomainFailure);
}

TEST_CASE("bench over EDF files") {
  TempDir tmp;
  const fs::path src = tmp / "edfs";
  fs::create_directories(src);
  fs::copy_file(edf_fixture("two_signal.edf"), src / "two_signal.edf");
  fs::copy_file(edf_fixture("edf_plus.edf"), src / "edf_plus.edf");
  const Run r = slf_cli({"--json", "bench", "--work-dir", (tmp / "w").string(),
                         "--edf-dir", src.string()});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  REQUIRE(j["rows"].size() == 4);
  CHECK(j["rows"][0]["format"] == "edf");
  CHECK(j["rows"][0]["conversion_time_s"].is_null());
  // Every format reads back the same physical values.
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(j["rows"][i]["conversion_time_s"].get<double>() >= 0.0);
    REQUIRE(j["rows"][i]["means"].size() == j["rows"][0]["means"].size());
    for (std::size_t m = 0; m < j["rows"][0]["means"].size(); ++m) {
      CHECK(j["rows"][i]["means"][m]["array"] == j["rows"][0]["means"][m]["array"]);
      CHECK(j["rows"][i]["means"][m]["mean"] == j["rows"][0]["means"][m]["mean"]);
    }
  }
  const auto csv = lines_of(testutil::read_text(tmp / "w" / "bench.csv"));
  REQUIRE(csv.size() == 5);
  CHECK(split(csv[1], ',')[4].empty());
}
