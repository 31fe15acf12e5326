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

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "slf/extract.hpp"
#include "slf/store.hpp"
#include "test_util.hpp"

using namespace slf;
using testutil::TempDir;

namespace {

template <typename T>
std::string error_code_of(T&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

double db(double gain) { return 20.0 * std::log10(gain); }

// Windowed sinc evaluated directly from its definition.
std::vector<double> reference_taps(int factor) {
  const int len = 10 * factor + 1;
  const double fc = 0.45 / factor;
  const double mid = (len - 1) / 2.0;
  std::vector<double> h(len);
  double sum = 0.0;
  for (int n = 0; n < len; ++n) {
    const double t = n - mid;
    const double sinc = t == 0.0 ? 1.0
                                 : std::sin(2.0 * std::numbers::pi * fc * t) /
                                       (2.0 * std::numbers::pi * fc * t);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (len - 1));
    h[n] = 2.0 * fc * sinc * window;
    sum += h[n];
  }
  for (double& x : h) x /= sum;
  return h;
}

double dtft_magnitude(const std::vector<double>& taps, double f) {
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    acc += taps[k] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(k));
  }
  return std::abs(acc);
}

// Sample at signed index i of x mirrored about its end samples, found by
// walking back and forth across the array.
double mirrored(const std::vector<double>& x, std::int64_t i) {
  const auto n = static_cast<std::int64_t>(x.size());
  if (n == 1) return x[0];
  std::int64_t pos = 0, dir = i >= 0 ? 1 : -1;
  for (std::int64_t step = 0; step < std::abs(i); ++step) {
    if (pos + dir < 0 || pos + dir >= n) dir = -dir;
    pos += dir;
  }
  return x[static_cast<std::size_t>(pos)];
}

std::vector<double> reference_decimate(const std::vector<double>& x, int factor) {
  const auto taps = reference_taps(factor);
  const auto half = static_cast<std::int64_t>(taps.size() / 2);
  std::vector<double> out;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(x.size()); i += factor) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(taps.size()); ++j) {
      acc += taps[static_cast<std::size_t>(j)] * mirrored(x, i + half - j);
    }
    out.push_back(acc);
  }
  return out;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::vector<double> sine(double rate, double freq, std::size_t n, double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate + phase);
  }
  return v;
}

Subject subject_with(const std::string& id, bool with_spo2) {
  Subject sub;
  sub.metadata.subject_id = id;
  sub.metadata.age = 33.0;
  std::vector<float> eeg(6400);
  for (std::size_t i = 0; i < eeg.size(); ++i) {
    eeg[i] = static_cast<float>(std::sin(0.05 * static_cast<double>(i)));
  }
  sub.add_array(SampleArray::from_values("eeg", 64.0, eeg, "uV"));
  if (with_spo2) {
    sub.add_array(SampleArray::from_values("spo2", 1.0, std::vector<std::int16_t>(100, 97), "%"));
  }
  AnnotationSet hyp;
  hyp.name = "hypnogram";
  hyp.name_type = std::string(kAasmSleepStage);
  hyp.annotations = {{"W", 0.0, 30.0, {}}, {"N1", 30.0, 30.0, {}}};
  sub.add_annotation_set(hyp);
  AnnotationSet ev;
  ev.name = "events";
  ev.annotations = {{"Lights off", 1.0, 0.0, {}}};
  sub.add_annotation_set(ev);
  return sub;
}

fs::path write_source(const fs::path& root) {
  Dataset ds;
  ds.name = "src";
  Series s;
  s.name = "night";
  s.add_subject(subject_with("a", true));
  s.add_subject(subject_with("b", false));
  s.add_subject(subject_with("c", true));
  ds.add_series(s);
  write_dataset(ds, root, {ArrayCodecSpec::chunked(3, 1000)});
  return root / "src";
}

ArraySelection select(std::string name) {
  ArraySelection s;
  s.source_name = std::move(name);
  return s;
}

}  // namespace

TEST_CASE("filter taps") {
  const auto t2 = design_lowpass_fir(2);
  CHECK(t2.size() == 21);
  double sum = 0.0;
  for (double x : t2) sum += x;
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  for (int f = 2; f <= 32; ++f) {
    const auto t = design_lowpass_fir(f);
    REQUIRE(t.size() == static_cast<std::size_t>(10 * f + 1));
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == t[t.size() - 1 - i]);
    const auto ref = reference_taps(f);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
  CHECK(error_code_of([] { design_lowpass_fir(1); }) == "invalid_factor");
  CHECK(error_code_of([] { design_lowpass_fir(0); }) == "invalid_factor");
}

TEST_CASE("factor 4 frequency response") {
  const auto taps = design_lowpass_fir(4);
  for (double f : {0.0, 0.03125, 0.0625, 0.1, 0.125, 0.2, 0.25, 0.375, 0.5}) {
    CHECK(fir_response(taps, f) == doctest::Approx(dtft_magnitude(taps, f)).epsilon(1e-12));
  }
  CHECK(db(dtft_magnitude(taps, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(db(dtft_magnitude(taps, 0.0625)) >= -1.0);
  CHECK(db(dtft_magnitude(taps, 0.25)) <= -20.0);
  for (double f = 0.25; f <= 0.5; f += 0.005) CHECK(db(dtft_magnitude(taps, f)) <= -20.0);
}

TEST_CASE("decimate matches direct convolution with mirrored edges") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise;
  for (int factor : {2, 3, 4, 7}) {
    for (std::size_t n : {1u, 2u, 3u, 10u, 41u, 500u}) {
      std::vector<double> x(n);
      for (double& v : x) v = noise(rng);
      const auto got = decimate(std::span<const double>(x), factor);
      const auto want = reference_decimate(x, factor);
      REQUIRE(got.size() == (n + factor - 1) / factor);
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12).scale(1.0));
      }
    }
  }
  CHECK(decimate(std::span<const double>(), 3).empty());
}

TEST_CASE("constant input keeps its value") {
  for (int factor : {2, 3, 4, 5, 8, 16}) {
    for (std::size_t n : {1u, 5u, 100u, 4097u}) {
      const std::vector<double> x(n, -37.25);
      for (double y : decimate(std::span<const double>(x), factor)) {
        CHECK(std::abs(y + 37.25) < 1e-6);
      }
    }
  }
}

TEST_CASE("factor 1 is bit-identical") {
  std::mt19937_64 rng(3);
  for (ValueType t : testutil::kAllTypes) {
    const ArrayValues v = testutil::random_values(rng, t, 333);
    CHECK(bit_equal(decimate(v, 1), v));
  }
}

TEST_CASE("24 Hz tone at 64 Hz is suppressed by factor 4") {
  // With zero phase every 4th sample is 0, so plain subsampling would pass too.
  const auto x = sine(64.0, 24.0, 64 * 60, 0.7);
  std::vector<double> subsampled;
  for (std::size_t i = 0; i < x.size(); i += 4) subsampled.push_back(x[i]);
  CHECK(rms(subsampled) >= 0.5 * rms(x));
  const auto y = decimate(std::span<const double>(x), 4);
  CHECK(rms(y) <= 0.1 * rms(x));
}

TEST_CASE("cascaded decimation matches a single step") {
  std::vector<double> x(256 * 120);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / 256.0;
    x[i] = std::sin(2 * std::numbers::pi * 0.5 * t) + 0.5 * std::sin(2 * std::numbers::pi * 1.3 * t + 1.0);
  }
  for (auto [a, b] : {std::pair{2, 2}, std::pair{2, 4}, std::pair{4, 2}, std::pair{2, 3}}) {
    const auto one = decimate(std::span<const double>(x), a * b);
    const auto first = decimate(std::span<const double>(x), a);
    const auto two = decimate(std::span<const double>(first), b);
    REQUIRE(one.size() == two.size());
    std::vector<double> diff(one.size());
    for (std::size_t i = 0; i < one.size(); ++i) diff[i] = one[i] - two[i];
    CHECK(rms(diff) <= 1e-3);
  }
}

TEST_CASE("typed decimation keeps the value type") {
  const ArrayValues v = std::vector<std::int16_t>(100, 1000);
  const ArrayValues d = decimate(v, 4);
  CHECK(value_type_of(d) == ValueType::int16);
  CHECK(size_of(d) == 25);
  for (auto x : std::get<std::vector<std::int16_t>>(d)) CHECK(x == 1000);
}

TEST_CASE("casting") {
  CHECK(std::get<std::vector<float>>(cast_values(std::vector<double>{1.0}, ValueType::float32)) ==
        std::vector<float>{1.0f});
  CHECK(std::get<std::vector<std::int16_t>>(
            cast_values(std::vector<float>{40000.0f, -40000.0f}, ValueType::int16)) ==
        std::vector<std::int16_t>{32767, -32768});
  CHECK(std::get<std::vector<std::int16_t>>(cast_values(std::vector<float>{-2.5f}, ValueType::int16)) ==
        std::vector<std::int16_t>{-3});
  const float inf = std::numeric_limits<float>::infinity();
  CHECK(std::get<std::vector<std::int32_t>>(cast_values(std::vector<float>{inf, -inf}, ValueType::int32)) ==
        std::vector<std::int32_t>{2147483647, -2147483647 - 1});
  CHECK(error_code_of([] { cast_values(std::vector<double>{std::nan("")}, ValueType::int32); }) ==
        "nan_to_int");
  CHECK(std::get<std::vector<double>>(cast_values(std::vector<std::int32_t>{-2147483647 - 1}, ValueType::float64)) ==
        std::vector<double>{-2147483648.0});
  const auto nan = cast_values(std::vector<double>{std::nan("")}, ValueType::float32);
  CHECK(std::isnan(std::get<std::vector<float>>(nan)[0]));
}

TEST_CASE("half-integer grid rounds away from zero") {
  std::vector<double> grid;
  for (int k = -2000; k <= 2000; ++k) grid.push_back(k + 0.5);
  const auto out = std::get<std::vector<std::int32_t>>(cast_values(grid, ValueType::int32));
  const auto out16 = std::get<std::vector<std::int16_t>>(cast_values(grid, ValueType::int16));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const double want = x > 0 ? std::floor(x) + 1 : std::ceil(x) - 1;
    CHECK(out[i] == static_cast<std::int32_t>(want));
    CHECK(out16[i] == static_cast<std::int16_t>(want));
  }
  const auto near = std::get<std::vector<std::int16_t>>(
      cast_values(std::vector<double>{2.4999999, -2.4999999, 0.49, -0.5, 0.5}, ValueType::int16));
  CHECK(near == std::vector<std::int16_t>{2, -2, 0, -1, 1});
}

TEST_CASE("decimation factors") {
  CHECK(decimation_factor(64.0, 16.0) == 4);
  CHECK(decimation_factor(256.0, 256.0) == 1);
  CHECK(decimation_factor(200.0, 0.5) == 400);
  CHECK(error_code_of([] { decimation_factor(100.0, 30.0); }) == "non_integer_factor");
  CHECK(error_code_of([] { decimation_factor(16.0, 64.0); }) == "non_integer_factor");
}

TEST_CASE("config parsing") {
  const ExtractConfig cfg = ExtractConfig::from_json(R"({
    "subject_filter": ["a"],
    "selections": [{"source_name": "eeg", "new_name": "eeg_16", "target_sampling_rate": 16,
                    "target_value_type": "float64"}],
    "annotation_sets": ["hypnogram"],
    "output_codec": {"kind": "chunked_zstd", "zstd_level": 5, "chunk_len": 100},
    "dataset_name": "out"
  })");
  CHECK(cfg.subject_filter == std::set<std::string>{"a"});
  REQUIRE(cfg.selections.size() == 1);
  CHECK(cfg.selections[0].new_name == "eeg_16");
  CHECK(cfg.selections[0].target_sampling_rate == 16.0);
  CHECK(cfg.selections[0].target_value_type == ValueType::float64);
  CHECK(cfg.output_codec.kind == CodecKind::chunked_zstd);
  CHECK(cfg.output_codec.zstd_level == 5);
  CHECK(cfg.output_codec.chunk_len == 100);
  CHECK(cfg.dataset_name == "out");

  for (const char* bad : {R"({"selections": []})", R"({})", R"([1])", "nope",
                          R"({"selections": [{"source_name": "x"}], "bogus": 1})",
                          R"({"selections": [{"source_name": "x", "target_sampling_rate": -1}]})",
                          R"({"selections": [{"source_name": "x", "target_value_type": "u8"}]})"}) {
    CAPTURE(bad);
    CHECK(error_code_of([&] { ExtractConfig::from_json(bad); }) == "invalid_config");
  }
  CHECK(error_code_of([] {
          ExtractConfig::from_json(R"({"selections": [{"source_name": "x"}],
              "output_codec": {"kind": "chunked_zstd", "zstd_level": 23}})");
        }) == "invalid_codec");
}

TEST_CASE("identity extraction copies the dataset losslessly") {
  TempDir tmp;
  const fs::path src = write_source(tmp / "in");
  const auto before = testutil::snapshot(src);
  ExtractConfig cfg;
  cfg.selections = {select(std::string(kAllArrays))};
  cfg.output_codec = ArrayCodecSpec::chunked(3, 1000);
  const ExtractReport r = extract(src, cfg, tmp / "out");
  CHECK(r.subjects_processed == 3);
  CHECK(r.arrays_written == 5);
  CHECK(r.resampled.empty());
  CHECK(r.warnings.empty());
  ReadOptions eager;
  eager.lazy_arrays = false;
  CHECK(read_dataset(tmp / "out" / "src", eager) == read_dataset(src, eager));
  CHECK(testutil::snapshot(src) == before);
  CHECK(testutil::snapshot(tmp / "out" / "src") == before);

  cfg.output_codec = ArrayCodecSpec::raw();
  extract(src, cfg, tmp / "raw");
  CHECK(read_dataset(tmp / "raw" / "src", eager) == read_dataset(src, eager));
}

TEST_CASE("decimating extraction") {
  TempDir tmp;
  const fs::path src = write_source(tmp / "in");
  const auto before = testutil::snapshot(src);
  ExtractConfig cfg;
  ArraySelection eeg = select("eeg");
  eeg.target_sampling_rate = 16.0;
  eeg.new_name = "eeg_16hz";
  cfg.selections = {eeg, select("spo2")};
  cfg.dataset_name = "small";
  const ExtractReport r = extract(src, cfg, tmp / "out");
  CHECK(testutil::snapshot(src) == before);
  CHECK(r.subjects_processed == 3);
  CHECK(r.arrays_written == 5);
  REQUIRE(r.resampled.size() == 3);
  CHECK(r.resampled[0].factor == 4);
  CHECK(r.resampled[0].array == "eeg_16hz");
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("selection_unsatisfied") != std::string::npos);
  CHECK(r.warnings[0].find("spo2") != std::string::npos);

  CHECK_FALSE(has_errors(check_dataset(tmp / "out" / "small")));
  const Dataset out = read_dataset(tmp / "out" / "small");
  const Subject& b = out.series.at("night").subjects.at("b");
  CHECK(b.sample_arrays.size() == 1);
  const ArrayAttributes& a = b.sample_arrays.at("eeg_16hz").attributes();
  CHECK(a.sampling_rate == 16.0);
  CHECK(a.n_samples == 1600);
  CHECK(a.unit == "uV");
  CHECK(a.value_type == ValueType::float32);
  CHECK(out.series.at("night").subjects.at("a").annotations ==
        read_dataset(src).series.at("night").subjects.at("a").annotations);
}

TEST_CASE("filters, renames and casts") {
  TempDir tmp;
  const fs::path src = write_source(tmp / "in");
  ExtractConfig cfg;
  ArraySelection spo2 = select("spo2");
  spo2.target_value_type = ValueType::float32;
  cfg.selections = {spo2};
  cfg.subject_filter = std::set<std::string>{"c"};
  cfg.annotation_sets = std::set<std::string>{"hypnogram"};
  const ExtractReport r = extract(src, cfg, tmp / "out");
  CHECK(r.subjects_processed == 1);
  const Dataset out = read_dataset(tmp / "out" / "src");
  const auto& subjects = out.series.at("night").subjects;
  REQUIRE(subjects.size() == 1);
  const Subject& c = subjects.at("c");
  CHECK(c.annotations.size() == 1);
  CHECK(c.annotations.contains("hypnogram"));
  const auto v = std::get<std::vector<float>>(c.sample_arrays.at("spo2").values());
  CHECK(v == std::vector<float>(100, 97.0f));
}

TEST_CASE("extraction errors") {
  TempDir tmp;
  const fs::path src = write_source(tmp / "in");
  ExtractConfig cfg;
  ArraySelection eeg = select("eeg");
  eeg.target_sampling_rate = 30.0;
  cfg.selections = {eeg};
  CHECK(error_code_of([&] { extract(src, cfg, tmp / "out"); }) == "non_integer_factor");
  CHECK_FALSE(fs::exists(tmp / "out" / "src"));

  cfg.selections = {select("nothing_here")};
  CHECK(error_code_of([&] { extract(src, cfg, tmp / "out"); }) == "empty_selection");

  cfg.selections = {select("eeg")};
  CHECK(error_code_of([&] { extract(src, cfg, tmp / "in"); }) == "destination_is_source");

  ArraySelection spo2 = select("spo2");
  spo2.new_name = "eeg";
  cfg.selections = {select("eeg"), spo2};
  CHECK(error_code_of([&] { extract(src, cfg, tmp / "out"); }) == "invalid_config");

  cfg.selections = {select("eeg")};
  extract(src, cfg, tmp / "out");
  CHECK(error_code_of([&] { extract(src, cfg, tmp / "out"); }) == "destination_exists");
  cfg.overwrite = true;
  CHECK_NOTHROW(extract(src, cfg, tmp / "out"));
}

TEST_CASE("parallel extraction writes the same tree") {
  TempDir tmp;
  const fs::path src = write_source(tmp / "in");
  ExtractConfig cfg;
  ArraySelection eeg = select("eeg");
  eeg.target_sampling_rate = 32.0;
  cfg.selections = {eeg, select("spo2")};
  extract(src, cfg, tmp / "one");
  cfg.workers = 4;
  extract(src, cfg, tmp / "four");
  CHECK(testutil::snapshot(tmp / "one") == testutil::snapshot(tmp / "four"));
}
