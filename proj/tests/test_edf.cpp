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
#include <limits>
#include <random>
#include <string>

#include "slf/edf.hpp"
#include "slf/store.hpp"
#include "edf_oracle.hpp"
#include "test_util.hpp"

using namespace slf;
using testutil::TempDir;
using testutil::Rational;
using testutil::exact;
using testutil::within_one_ulp;
using testutil::random_tal_stream;
using testutil::split_tals;

namespace {

fs::path edf_fixture(const std::string& name) { return testutil::golden("edf/" + name); }

nlohmann::json expected() {
  return nlohmann::json::parse(testutil::read_text(edf_fixture("expected.json")));
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

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

// Literal bytes including embedded NULs, without the terminator.
template <std::size_t N>
Bytes lit(const char (&s)[N]) {
  return Bytes(s, s + N - 1);
}

EdfHeader one_signal_header() {
  EdfHeader h;
  h.patient_id = "X";
  h.recording_id = "X";
  h.start_datetime = Timestamp::from_civil(2001, 2, 3, 4, 5, 6);
  h.header_bytes = 512;
  h.n_records = 2;
  h.record_duration_sec = 1.0;
  h.n_signals = 1;
  EdfSignalHeader s;
  s.label = "EEG Fpz-Cz";
  s.physical_dimension = "uV";
  s.physical_min = -250;
  s.physical_max = 250;
  s.digital_min = -2048;
  s.digital_max = 2047;
  s.samples_per_record = 4;
  h.signals.push_back(s);
  return h;
}

Bytes with_field(Bytes b, std::size_t offset, std::size_t width, const std::string& text) {
  std::string padded = text;
  padded.resize(width, ' ');
  std::copy(padded.begin(), padded.end(), b.begin() + static_cast<std::ptrdiff_t>(offset));
  return b;
}

}  // namespace

TEST_CASE("fixture headers and samples match the independent writer") {
  const auto exp = expected();
  for (const auto& [file, e] : exp.items()) {
    CAPTURE(file);
    const EdfFile edf = EdfFile::open(edf_fixture(file), ParseMode::strict);
    const EdfHeader& h = edf.header();
    CHECK(h.version == e["version"].get<std::string>());
    CHECK(h.patient_id == e["patient_id"].get<std::string>());
    CHECK(h.recording_id == e["recording_id"].get<std::string>());
    CHECK(h.start_datetime.to_iso() == e["start"].get<std::string>());
    CHECK(h.header_bytes == e["header_bytes"].get<std::int64_t>());
    CHECK(h.reserved == e["reserved"].get<std::string>());
    CHECK(h.n_records == e["n_records"].get<std::int64_t>());
    CHECK(h.record_duration_sec == e["record_duration_sec"].get<double>());
    CHECK(h.n_signals == e["n_signals"].get<int>());
    std::size_t k = 0;
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
      const EdfSignalHeader& s = h.signals[i];
      if (s.is_annotation_channel) continue;
      const auto& es = e["signals"][k++];
      CHECK(s.label == es["label"].get<std::string>());
      CHECK(s.transducer == es["transducer"].get<std::string>());
      CHECK(s.physical_dimension == es["physical_dimension"].get<std::string>());
      CHECK(s.physical_min == es["physical_min"].get<double>());
      CHECK(s.physical_max == es["physical_max"].get<double>());
      CHECK(s.digital_min == es["digital_min"].get<int>());
      CHECK(s.digital_max == es["digital_max"].get<int>());
      CHECK(s.prefiltering == es["prefiltering"].get<std::string>());
      CHECK(s.samples_per_record == es["samples_per_record"].get<int>());
      CHECK(s.reserved == es["reserved"].get<std::string>());
      const auto digital = edf.read_signal_digital(i);
      CHECK(std::vector<int>(digital.begin(), digital.end()) ==
            es["digital"].get<std::vector<int>>());
      const PhysicalSignal p = edf.read_signal_physical(i);
      CHECK(p.sampling_rate == es["sampling_rate"].get<double>());
      const auto phys = es["physical"].get<std::vector<double>>();
      REQUIRE(p.values.size() == phys.size());
      for (std::size_t j = 0; j < phys.size(); ++j) {
        CHECK(p.values[j] == static_cast<float>(phys[j]));
      }
    }
    CHECK(k == e["signals"].size());
    std::vector<TalAnnotation> tals;
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
      if (!h.signals[i].is_annotation_channel) continue;
      tals = parse_tal_records(edf.read_signal_bytes(i));
    }
    REQUIRE(tals.size() == e["tals"].size());
    for (std::size_t j = 0; j < tals.size(); ++j) {
      const auto& et = e["tals"][j];
      CHECK(tals[j].onset_sec == et["onset"].get<double>());
      if (et["duration"].is_null()) {
        CHECK_FALSE(tals[j].duration_sec.has_value());
      } else {
        CHECK(tals[j].duration_sec == et["duration"].get<double>());
      }
      CHECK(tals[j].texts == et["texts"].get<std::vector<std::string>>());
    }
  }
}

TEST_CASE("minimal one-signal header") {
  const Bytes b = write_edf(one_signal_header(), {digital_bytes({1, 2, 3, 4, 5, 6, 7, 8})});
  const EdfHeader h = parse_edf_header(b, ParseMode::strict);
  CHECK(h.n_signals == 1);
  CHECK(h.header_bytes == 512);
  CHECK(h.record_bytes() == 8);
}

TEST_CASE("start date century rule") {
  const Bytes base = write_edf(one_signal_header(), {digital_bytes(std::vector<std::int16_t>(8))});
  const auto year_of = [&](const char* date) {
    const EdfHeader h = parse_edf_header(with_field(base, 168, 8, date), ParseMode::strict);
    return static_cast<int>(std::chrono::year_month_day(
                                std::chrono::floor<std::chrono::days>(h.start_datetime.time))
                                .year());
  };
  CHECK(year_of("02.01.99") == 1999);
  CHECK(year_of("02.01.10") == 2010);
  CHECK(year_of("01.01.85") == 1985);
  CHECK(year_of("31.12.84") == 2084);
  CHECK(year_of("01.01.00") == 2000);
  CHECK(error_code_of([&] {
          parse_edf_header(with_field(base, 168, 8, "32.01.10"), ParseMode::strict);
        }) == "malformed_date");
  Warnings w;
  const EdfHeader h = parse_edf_header(with_field(base, 168, 8, "xx.yy.zz"), ParseMode::lenient, &w);
  CHECK(h.start_datetime.to_iso() == "1985-01-01T00:00:00");
  CHECK(w.size() == 1);
}

TEST_CASE("unknown record count sentinel is accepted in strict mode") {
  const Bytes base = write_edf(one_signal_header(), {digital_bytes(std::vector<std::int16_t>(8))});
  const EdfFile edf = EdfFile::from_bytes(with_field(base, 236, 8, "  -1  "), ParseMode::strict);
  CHECK(edf.header().n_records == -1);
  CHECK(edf.record_count() == 2);
  CHECK(edf.read_signal_physical(0).values.size() == 8);
}

TEST_CASE("numeric field errors and lenient defaults") {
  const Bytes base = write_edf(one_signal_header(), {digital_bytes(std::vector<std::int16_t>(8))});
  // n_records, duration, pmin, dmin.
  const Bytes bad_records = with_field(base, 236, 8, "many");
  CHECK(error_code_of([&] { parse_edf_header(bad_records, ParseMode::strict); }) ==
        "malformed_numeric_field");
  Warnings w;
  CHECK(parse_edf_header(bad_records, ParseMode::lenient, &w).n_records == -1);
  CHECK(w.size() == 1);

  const Bytes bad_duration = with_field(base, 244, 8, "?");
  CHECK(error_code_of([&] { parse_edf_header(bad_duration, ParseMode::strict); }) ==
        "malformed_numeric_field");
  CHECK(parse_edf_header(bad_duration, ParseMode::lenient).record_duration_sec == 1.0);

  const std::size_t pmin_at = 256 + 16 + 80 + 8;
  const Bytes bad_pmin = with_field(base, pmin_at, 8, "low");
  CHECK(error_code_of([&] { parse_edf_header(bad_pmin, ParseMode::strict); }) ==
        "malformed_numeric_field");
  CHECK(parse_edf_header(bad_pmin, ParseMode::lenient).signals[0].physical_min == -2048.0);

  const Bytes comma = with_field(base, pmin_at, 8, "-249,5");
  CHECK(parse_edf_header(comma, ParseMode::lenient).signals[0].physical_min == -249.5);

  const Bytes bad_signals = with_field(base, 252, 4, "x");
  CHECK(error_code_of([&] { parse_edf_header(bad_signals, ParseMode::lenient); }) ==
        "malformed_numeric_field");
}

TEST_CASE("header byte count and truncation") {
  const Bytes base = write_edf(one_signal_header(), {digital_bytes(std::vector<std::int16_t>(8))});
  const Bytes wrong = with_field(base, 184, 8, "768");
  CHECK(error_code_of([&] { parse_edf_header(wrong, ParseMode::strict); }) ==
        "inconsistent_header_bytes");
  Warnings w;
  CHECK_NOTHROW(parse_edf_header(wrong, ParseMode::lenient, &w));
  CHECK(w.size() == 1);
  CHECK(error_code_of([&] { parse_edf_header(ByteView(base).first(200), ParseMode::lenient); }) ==
        "truncated_header");
  CHECK(error_code_of([&] { parse_edf_header(ByteView(base).first(300), ParseMode::lenient); }) ==
        "truncated_header");
}

TEST_CASE("truncated records") {
  CHECK(error_code_of([] { EdfFile::open(edf_fixture("truncated.edf"), ParseMode::strict); }) ==
        "truncated_record");
  const EdfFile edf = EdfFile::open(edf_fixture("truncated.edf"), ParseMode::lenient);
  CHECK(edf.record_count() == 2);
  CHECK(edf.read_signal_physical(0).values.size() == 6);
  CHECK_FALSE(edf.warnings().empty());
}

TEST_CASE("calibration examples") {
  EdfSignalHeader s = one_signal_header().signals[0];
  CHECK(digital_to_physical(-2048, s) == -250.0);
  CHECK(digital_to_physical(2047, s) == 250.0);
  CHECK(within_one_ulp(digital_to_physical(0, s), Rational(2048 * 500, 4095) - 250));
  CHECK(digital_to_physical(0, s) == doctest::Approx(0.0611).epsilon(1e-3));
  s.digital_max = s.digital_min;
  CHECK(error_code_of([&] { digital_to_physical(3, s); }) == "zero_digital_range");
  CHECK(digital_to_physical(3, s, ParseMode::lenient) == 3.0 - 250.0);
}

TEST_CASE("calibration agrees with exact rational arithmetic") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dig(-32768, 32767);
  std::uniform_real_distribution<double> phys(-5000.0, 5000.0);
  for (int k = 0; k < 10000; ++k) {
    EdfSignalHeader s;
    int a = dig(rng), b = dig(rng);
    while (a == b) b = dig(rng);
    s.digital_min = std::min(a, b);
    s.digital_max = std::max(a, b);
    s.physical_min = phys(rng);
    s.physical_max = (k % 3 == 0) ? -s.physical_min : phys(rng);
    const int d = std::uniform_int_distribution<int>(s.digital_min, s.digital_max)(rng);
    CHECK(within_one_ulp(digital_to_physical(d, s), testutil::exact_physical(d, s)));
    CHECK(digital_to_physical(s.digital_min, s) == s.physical_min);
    CHECK(digital_to_physical(s.digital_max, s) == s.physical_max);
    if ((s.digital_min + s.digital_max) % 2 == 0) {
      const Rational mid = (exact(s.physical_min) + exact(s.physical_max)) / 2;
      CHECK(within_one_ulp(digital_to_physical((s.digital_min + s.digital_max) / 2, s), mid));
    }
  }
}

TEST_CASE("physical signal examples") {
  EdfHeader h = one_signal_header();
  const EdfFile edf = EdfFile::from_bytes(
      write_edf(h, {digital_bytes({0, 1023, -1024, 2047, -2048, -2048, -2048, -2048})}),
      ParseMode::strict);
  const PhysicalSignal p = edf.read_signal_physical(0);
  CHECK(p.values.size() == 8);
  CHECK(p.sampling_rate == 4.0);
  for (int i = 0; i < 4; ++i) {
    const int d = std::vector<int>{0, 1023, -1024, 2047}[i];
    const double formula = (d + 2048) * 500.0 / 4095.0 - 250.0;
    CHECK(p.values[i] == doctest::Approx(static_cast<float>(formula)).epsilon(1e-7));
  }
  for (int i = 4; i < 8; ++i) CHECK(p.values[i] == -250.0f);
  CHECK(error_code_of([&] { edf.read_signal_physical(1); }) == "out_of_range");
}

TEST_CASE("written EDF files parse back field for field") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    EdfHeader h;
    h.patient_id = "P" + std::to_string(rng() % 1000);
    h.recording_id = "Startdate X R" + std::to_string(trial);
    h.start_datetime = Timestamp::from_civil(1985 + int(rng() % 99), 1 + unsigned(rng() % 12),
                                             1 + unsigned(rng() % 28), unsigned(rng() % 24),
                                             unsigned(rng() % 60), unsigned(rng() % 60));
    h.n_records = static_cast<std::int64_t>(rng() % 5);
    h.record_duration_sec = 0.25 * double(1 + rng() % 40);
    h.n_signals = 1 + static_cast<int>(rng() % 4);
    h.header_bytes = 256 + 256 * h.n_signals;
    if (rng() % 2) h.reserved = "EDF+C";
    std::vector<Bytes> data;
    std::vector<std::vector<std::int16_t>> samples;
    for (int i = 0; i < h.n_signals; ++i) {
      EdfSignalHeader s;
      s.label = "Sig " + std::to_string(i);
      s.transducer = rng() % 2 ? "AgCl" : "";
      s.physical_dimension = rng() % 2 ? "uV" : "mV";
      s.physical_min = -double(rng() % 20000) / 4.0;
      s.physical_max = double(1 + rng() % 40000) / 4.0;
      s.digital_min = -int(rng() % 32769);
      s.digital_max = 1 + int(rng() % 32767);
      s.prefiltering = "HP:0.1Hz";
      s.samples_per_record = 1 + static_cast<int>(rng() % 50);
      s.reserved = rng() % 2 ? "" : "r";
      h.signals.push_back(s);
      std::vector<std::int16_t> v(static_cast<std::size_t>(h.n_records * s.samples_per_record));
      for (auto& x : v) x = static_cast<std::int16_t>(rng());
      data.push_back(digital_bytes(v));
      samples.push_back(v);
    }
    const EdfFile edf = EdfFile::from_bytes(write_edf(h, data), ParseMode::strict);
    CHECK(edf.header() == h);
    for (int i = 0; i < h.n_signals; ++i) CHECK(edf.read_signal_digital(i) == samples[i]);
  }
}

TEST_CASE("TAL examples") {
  const auto a = parse_tal_records(lit("+30\x15" "15\x14" "Apnea\x14\0"));
  REQUIRE(a.size() == 1);
  CHECK(a[0].onset_sec == 30.0);
  CHECK(a[0].duration_sec == 15.0);
  CHECK(a[0].texts == std::vector<std::string>{"Apnea"});
  CHECK(parse_tal_records(lit("+0\x14\x14\0")).empty());
  CHECK(parse_tal_records(Bytes{}).empty());
  const auto multi = parse_tal_records(
      lit("-0.5\x14" "a\x14" "b\x14\0\0\0+2\x14" "c\x14\0"));
  REQUIRE(multi.size() == 2);
  CHECK(multi[0].onset_sec == -0.5);
  CHECK(multi[0].texts == std::vector<std::string>{"a", "b"});
}

TEST_CASE("malformed TALs") {
  const Bytes unterminated = bytes_of("+1\x14" "abc");
  const Bytes no_number = lit("+x\x14" "abc\x14\0+2\x14" "ok\x14\0");
  const Bytes no_sign = lit("1\x14" "abc\x14\0");
  for (const Bytes* b : {&unterminated, &no_number, &no_sign}) {
    CHECK(error_code_of([&] { parse_tal_records(*b, ParseMode::strict); }) == "malformed_tal");
  }
  Warnings w;
  const auto lenient = parse_tal_records(no_number, ParseMode::lenient, &w);
  REQUIRE(lenient.size() == 1);
  CHECK(lenient[0].texts == std::vector<std::string>{"ok"});
  CHECK(w.size() == 1);
  w.clear();
  const auto bad_utf8 =
      parse_tal_records(lit("+1\x14" "a\xff" "b\x14\0"), ParseMode::lenient, &w);
  REQUIRE(bad_utf8.size() == 1);
  CHECK(bad_utf8[0].texts[0] == "a\xEF\xBF\xBD" "b");
  CHECK(error_code_of([] {
          parse_tal_records(lit("+1\x14" "a\xff" "b\x14\0"), ParseMode::strict);
        }) == "malformed_tal");
}

TEST_CASE("TAL parser agrees with a character-level splitter") {
  std::mt19937_64 rng(101);
  for (int k = 0; k < 1000; ++k) {
    const std::string stream = random_tal_stream(rng);
    CAPTURE(k);
    CHECK(parse_tal_records(bytes_of(stream), ParseMode::strict) == split_tals(stream));
  }
}

TEST_CASE("encode_tal and annotation channel bytes parse back") {
  const TalAnnotation t{12.5, 3.0, {"Sleep stage 2", "x"}};
  const std::string enc = encode_tal(t);
  CHECK(parse_tal_records(bytes_of(enc)) == std::vector<TalAnnotation>{t});
  const Bytes channel = annotation_channel_bytes({{t}, {}}, 30.0, 20);
  CHECK(channel.size() == 80);
  CHECK(parse_tal_records(channel) == std::vector<TalAnnotation>{t});
}

TEST_CASE("annotation mapping") {
  const std::vector<TalAnnotation> tals = {
      {0.0, 30.0, {"Sleep stage N2"}},
      {10.0, std::nullopt, {"Lights off"}},
      {-5.0, 1.0, {"Arousal"}},
      {30.0, 30.0, {"Sleep stage 4"}},
      {40.0, 2.0, {"Obstructive apnea"}},
  };
  AnnotationMapping mapping = AnnotationMapping::from_json(
      R"({"event_sets": [{"pattern": ".*apnea", "set_name": "respiratory"}],
          "stage_aliases": {"stage two": "N2"}})");
  Warnings w;
  const auto sets = map_annotations(tals, mapping, &w);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0].name == "hypnogram");
  CHECK(sets[0].name_type == kAasmSleepStage);
  REQUIRE(sets[0].annotations.size() == 2);
  CHECK(sets[0].annotations[0].name == "N2");
  CHECK(sets[0].annotations[1].name == "N3");
  CHECK(sets[1].name == "respiratory");
  CHECK(sets[1].annotations[0].name == "Obstructive apnea");
  CHECK(sets[2].name == "edf_annotations");
  CHECK(sets[2].name_type == kFreeText);
  REQUIRE(sets[2].annotations.size() == 1);
  CHECK(sets[2].annotations[0].name == "Lights off");
  CHECK(sets[2].annotations[0].duration_sec == 0.0);
  CHECK(sets[2].annotations[0].start_sec == 10.0);
  CHECK(w.size() == 2);

  const auto custom = map_annotations({{0.0, 30.0, {"STAGE TWO"}}}, mapping);
  REQUIRE(custom.size() == 1);
  CHECK(custom[0].annotations[0].name == "N2");
  CHECK(map_annotations({}, mapping).empty());

  CHECK(error_code_of([] { AnnotationMapping::from_json("[]"); }) == "invalid_mapping");
  CHECK(error_code_of([] { AnnotationMapping::from_json(R"({"stage_aliases": {"x": "N4"}})"); }) ==
        "invalid_mapping");
  CHECK(error_code_of([] { AnnotationMapping::from_json(R"({"event_sets": [{"pattern": "("}]})"); }) ==
        "invalid_mapping");
  CHECK(error_code_of([] { AnnotationMapping::from_json(R"({"other": 1})"); }) == "invalid_mapping");
}

TEST_CASE("label sanitization") {
  CHECK(sanitize_label("EEG Fpz-Cz") == "eeg_fpz_cz");
  CHECK(sanitize_label("  Resp oro-nasal  ") == "resp_oro_nasal");
  CHECK(sanitize_label("SpO2") == "spo2");
  CHECK(sanitize_label("a -- b") == "a_b");
  CHECK(sanitize_label("   ") == "signal");
  CHECK(sanitize_label("Température") == "temp_rature");
}

TEST_CASE("patient field parsing") {
  SubjectMetadata m;
  parse_edf_plus_patient("MCH-0234567 F 02-MAY-1951 Haagse_Harry",
                         Timestamp::from_civil(2002, 3, 2), m);
  CHECK(m.sex == "F");
  CHECK(m.age == 50.0);
  SubjectMetadata n;
  parse_edf_plus_patient("MCH-0234567 F 02-MAY-1951 Haagse_Harry",
                         Timestamp::from_civil(2002, 5, 2), n);
  CHECK(n.age == 51.0);
  SubjectMetadata x;
  parse_edf_plus_patient("X X X X", Timestamp::from_civil(2002, 5, 2), x);
  CHECK_FALSE(x.sex.has_value());
  CHECK_FALSE(x.age.has_value());
}

TEST_CASE("converting the two-signal fixture") {
  const ConvertedSubject c =
      convert_edf_to_subject(edf_fixture("two_signal.edf"), "s1", ParseMode::strict);
  const Subject& s = c.subject;
  REQUIRE(s.sample_arrays.size() == 2);
  const SampleArray& eeg = s.sample_arrays.at("eeg_fpz_cz");
  const SampleArray& resp = s.sample_arrays.at("resp_oro_nasal");
  CHECK(eeg.attributes().value_type == ValueType::float32);
  CHECK(eeg.attributes().sampling_rate == 4.0);
  CHECK(eeg.attributes().unit == "uV");
  CHECK(eeg.attributes().duration_sec() == 2.0);
  CHECK(resp.attributes().duration_sec() == 2.0);
  CHECK(s.annotations.empty());
  CHECK(s.metadata.recording_start->to_iso() == "1999-01-02T23:15:00");
  Dataset ds;
  ds.name = "d";
  Series series;
  series.name = "edf";
  series.add_subject(s);
  ds.add_series(series);
  CHECK_FALSE(has_errors(validate_dataset(ds)));
}

TEST_CASE("converting the EDF+ fixture") {
  const ConvertedSubject c =
      convert_edf_to_subject(edf_fixture("edf_plus.edf"), "s2", ParseMode::strict);
  const Subject& s = c.subject;
  CHECK(s.sample_arrays.size() == 1);
  CHECK(s.sample_arrays.contains("eeg_c4_a1"));
  REQUIRE(s.annotations.size() == 2);
  const AnnotationSet& hyp = s.annotations.at("hypnogram");
  REQUIRE(hyp.annotations.size() == 2);
  CHECK(hyp.annotations[0].name == "W");
  CHECK(hyp.annotations[0].duration_sec == 30.0);
  CHECK(hyp.annotations[1].name == "N3");
  const AnnotationSet& other = s.annotations.at("edf_annotations");
  REQUIRE(other.annotations.size() == 2);
  CHECK(other.annotations[0].name == "Lights off");
  CHECK(other.annotations[1].name == "Apnea");
  CHECK(s.metadata.sex == "F");
  CHECK(s.metadata.age == 50.0);
  CHECK(c.warnings.size() == 1);
}

TEST_CASE("discontinuous files are rejected") {
  CHECK(error_code_of([] {
          convert_edf_to_subject(edf_fixture("discontinuous.edf"), "s", ParseMode::lenient);
        }) == "unsupported_discontinuous");
}

TEST_CASE("duplicate sanitized labels") {
  EdfHeader h = one_signal_header();
  h.n_signals = 3;
  h.header_bytes = 256 * 4;
  h.signals.push_back(h.signals[0]);
  h.signals.push_back(h.signals[0]);
  h.signals[1].label = "eeg fpz cz";
  h.signals[2].label = "annotations";
  const Bytes d = digital_bytes(std::vector<std::int16_t>(8));
  const Bytes file = write_edf(h, {d, d, d});
  CHECK(error_code_of([&] {
          convert_edf_to_subject(EdfFile::from_bytes(file, ParseMode::strict), "s");
        }) == "duplicate_label");
  const ConvertedSubject c =
      convert_edf_to_subject(EdfFile::from_bytes(file, ParseMode::lenient), "s");
  std::vector<std::string> names;
  for (const auto& [k, a] : c.subject.sample_arrays) names.push_back(k);
  CHECK(names == std::vector<std::string>{"eeg_fpz_cz", "eeg_fpz_cz_2", "annotations_2"});
}

TEST_CASE("sample counts follow records") {
  for (const char* file : {"two_signal.edf", "unknown_count.edf"}) {
    const EdfFile edf = EdfFile::open(edf_fixture(file), ParseMode::strict);
    const ConvertedSubject c = convert_edf_to_subject(edf, "s");
    std::size_t i = 0;
    for (const auto& [k, a] : c.subject.sample_arrays) {
      while (edf.header().signals[i].is_annotation_channel) ++i;
      CHECK(a.attributes().n_samples ==
            edf.record_count() * edf.header().signals[i].samples_per_record);
      ++i;
    }
  }
}

TEST_CASE("directory conversion") {
  TempDir src, dest;
  for (const char* f : {"two_signal.edf", "edf_plus.edf", "unknown_count.edf"}) {
    fs::copy_file(edf_fixture(f), src / f);
  }
  ConvertOptions opts;
  opts.dataset_name = "edfset";
  opts.series_name = "night";
  const ConversionReport r = convert_directory(src.path(), dest.path(), opts);
  CHECK(r.converted == 3);
  CHECK(r.skipped.empty());
  CHECK(r.elapsed_sec > 0.0);
  CHECK(r.dataset_dir == dest / "edfset");
  const Dataset ds = read_dataset(dest / "edfset");
  const Series& night = ds.series.at("night");
  CHECK(night.subjects.size() == 3);
  CHECK(night.subjects.contains("edf_plus"));
  CHECK(error_code_of([&] { convert_directory(src.path(), dest.path(), opts); }) ==
        "destination_exists");

  testutil::write_bytes(src / "broken.edf", bytes_of("0       not an edf file"));
  opts.overwrite = true;
  opts.workers = 3;
  const ConversionReport r2 = convert_directory(src.path(), dest.path(), opts);
  CHECK(r2.converted == 3);
  REQUIRE(r2.skipped.size() == 1);
  CHECK(r2.skipped[0].path.filename() == "broken.edf");
  CHECK(r2.skipped[0].code == "truncated_header");
  CHECK_FALSE(r2.skipped[0].reason.empty());

  opts.mode = ParseMode::strict;
  CHECK(error_code_of([&] { convert_directory(src.path(), dest.path(), opts); }) ==
        "truncated_header");

  TempDir empty;
  CHECK(error_code_of([&] { convert_directory(empty.path(), dest.path(), opts); }) ==
        "empty_source_directory");
}
