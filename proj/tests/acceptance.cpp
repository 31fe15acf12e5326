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

// Acceptance suite: prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "edf_oracle.hpp"
#include "slf/bench.hpp"
#include "slf/cli.hpp"
#include "slf/edf.hpp"
#include "slf/extract.hpp"
#include "slf/store.hpp"
#include "system_zstd.hpp"
#include "test_util.hpp"

using namespace slf;
using testutil::TempDir;
using nlohmann::json;

namespace {

// Collects failed checks for one criterion.
class Checker {
 public:
  void check(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : ", ") + text; }
  bool passed() const { return failures_.empty() && checks_ > 0; }
  std::size_t checks() const { return checks_; }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::string& notes() const { return notes_; }

 private:
  std::size_t checks_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

bool has_error(const Issues& issues, const std::string& code) {
  for (const auto& i : issues) {
    if (i.code == code && i.severity == Severity::error) return true;
  }
  return false;
}

ReadOptions eager_options() {
  ReadOptions o;
  o.lazy_arrays = false;
  return o;
}

// ---------------------------------------------------------------------------

void round_trip(Checker& c) {
  std::mt19937_64 rng(20260101);
  const ArrayCodecSpec codecs[] = {ArrayCodecSpec::raw(), ArrayCodecSpec::chunked()};
  std::uint64_t samples = 0;
  for (int k = 0; k < 200; ++k) {
    const Dataset ds = testutil::random_dataset(rng, 100000, "rt" + std::to_string(k));
    for (const auto& [sk, s] : ds.series) {
      for (const auto& [jk, sub] : s.subjects) {
        for (const auto& [ak, a] : sub.sample_arrays) samples += a.attributes().n_samples;
      }
    }
    for (const auto& codec : codecs) {
      TempDir tmp("slf-acc");
      write_dataset(ds, tmp.path(), {codec});
      const std::string tag = "dataset " + std::to_string(k) + " " + codec.label();
      c.check(read_dataset(tmp / ds.name, eager_options()) == ds, tag + " eager read differs");
      c.check(read_dataset(tmp / ds.name) == ds, tag + " lazy read differs");
    }
  }
  c.note("200 datasets x 2 codecs, " + std::to_string(samples) + " samples each way");
}

void golden_files(Checker& c) {
  using testutil::golden;
  using testutil::read_bytes;
  c.check(encode_raw_array(std::vector<float>{}, ValueType::float32) ==
              read_bytes(golden("empty_f4.npy")),
          "empty_f4.npy");
  c.check(encode_raw_array(std::vector<float>{0.0f}, ValueType::float32) ==
              read_bytes(golden("zero_f4.npy")),
          "zero_f4.npy");
  c.check(encode_raw_array(std::vector<std::int16_t>{1, -1}, ValueType::int16) ==
              read_bytes(golden("pair_i2.npy")),
          "pair_i2.npy");
  c.check(encode_raw_array(std::vector<double>{3.5, -2.25, 1e300, -0.0, 5e-324},
                           ValueType::float64) == read_bytes(golden("mixed_f8.npy")),
          "mixed_f8.npy");
  std::vector<std::int32_t> ramp_i4;
  for (int i = -5; i < 300; ++i) ramp_i4.push_back(i);
  c.check(encode_raw_array(ramp_i4, ValueType::int32) == read_bytes(golden("ramp_i4.npy")),
          "ramp_i4.npy");
  std::vector<float> ramp_f4;
  for (int i = 0; i < 1000; ++i) ramp_f4.push_back(static_cast<float>((i - 500) / 8.0));
  c.check(encode_raw_array(ramp_f4, ValueType::float32) == read_bytes(golden("ramp_f4.npy")),
          "ramp_f4.npy");
  const std::string pre = make_npy_preamble(ValueType::float32, 12345678901LL);
  c.check(Bytes(pre.begin(), pre.end()) == read_bytes(golden("header_f4_12345678901.bin")),
          "long-shape preamble");

  std::vector<float> half(10);
  for (int i = 0; i < 10; ++i) half[i] = 0.5f * static_cast<float>(i);
  const ChunkedArray enc = encode_chunked_array(half, ValueType::float32, 4, 9);
  c.check(enc.zarray == testutil::read_text(golden("zarray_f4_n10_c4_l9.json")), ".zarray text");

  testutil::SystemZstd sys;
  c.check(sys.available(), "system libzstd not loadable");
  if (!sys.available()) return;
  c.note("standalone zstd " + sys.version());
  const Bytes expected = read_bytes(golden("chunks_f4_n10_c4.bin"));
  c.check(enc.chunks.size() == 3 && expected.size() == 48, "golden chunk count");
  for (std::size_t i = 0; i < enc.chunks.size() && expected.size() == 48; ++i) {
    const auto d = sys.decompress_single_frame(enc.chunks[i]);
    c.check(d && *d == Bytes(expected.begin() + 16 * static_cast<std::ptrdiff_t>(i),
                             expected.begin() + 16 * static_cast<std::ptrdiff_t>(i + 1)),
            "golden chunk " + std::to_string(i));
  }

  // Chunk files of a written dataset, decoded by the standalone library.
  std::mt19937_64 rng(9);
  TempDir tmp("slf-acc");
  for (ValueType t : testutil::kAllTypes) {
    const ArrayValues v = testutil::random_values(rng, t, 5000);
    Dataset ds;
    ds.name = "g";
    Series s;
    s.name = "s";
    Subject sub;
    sub.metadata.subject_id = "x";
    sub.add_array(SampleArray::from_values("sig", 1.0, v));
    s.add_subject(sub);
    ds.add_series(s);
    write_dataset(ds, tmp.path(), {ArrayCodecSpec::chunked(3, 1024), true});
    const Bytes npy = encode_raw_array(v, t);
    const std::size_t item = item_size(t);
    Bytes flat;
    for (int i = 0; i < 5; ++i) {
      const auto d = sys.decompress_single_frame(
          testutil::read_bytes(tmp / "g" / "s" / "x" / "sig" / "data.zarr" / std::to_string(i)));
      c.check(d && d->size() == 1024 * item, "written chunk " + std::to_string(i));
      if (d) flat.insert(flat.end(), d->begin(), d->end());
    }
    flat.resize(5000 * item);
    c.check(flat == Bytes(npy.begin() + 128, npy.end()),
            std::string("written chunks of ") + std::string(to_string(t)));
  }
}

void lazy_reads(Checker& c) {
  TempDir tmp("slf-acc");
  const std::size_t n = 8 * 3600 * 64;
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(i);
  auto single = [&](const std::string& name, const ArrayValues& values,
                    const ArrayCodecSpec& codec) {
    Dataset ds;
    ds.name = name;
    Series s;
    s.name = "s";
    Subject sub;
    sub.metadata.subject_id = "x";
    sub.add_array(SampleArray::from_values("sig", 64.0, values));
    s.add_subject(sub);
    ds.add_series(s);
    write_dataset(ds, tmp.path(), {codec});
    return tmp / name / "s" / "x" / "sig";
  };
  const auto raw = open_array(single("raw", v, ArrayCodecSpec::raw()));
  IoStats stats;
  const auto w = std::get<std::vector<float>>(read_window(raw, 1000000, 30 * 64, &stats));
  c.check(stats.bytes_read <= 7808, "30 s raw window read " + std::to_string(stats.bytes_read.load()));
  c.check(w.front() == 1000000.0f && w.back() == 1001919.0f, "raw window values");
  c.note("30 s raw window read " + std::to_string(stats.bytes_read.load()) + " B");

  std::mt19937_64 rng(33);
  std::uint64_t worst = 0;
  for (int k = 0; k < 100; ++k) {
    const std::int64_t count = static_cast<std::int64_t>(rng() % 20000);
    const std::int64_t start = static_cast<std::int64_t>(rng() % (n - count + 1));
    IoStats s;
    const auto got = std::get<std::vector<float>>(read_window(raw, start, count, &s));
    c.check(s.bytes_read <= static_cast<std::uint64_t>(count) * 4 + 128, "raw window bound");
    c.check(count == 0 || got[0] == static_cast<float>(start), "raw window start value");
    worst = std::max(worst, s.bytes_read.load() - static_cast<std::uint64_t>(count) * 4);
  }

  const std::int64_t chunk = 4096;
  const fs::path dir = single("chunked", v, ArrayCodecSpec::chunked(9, chunk));
  const auto zarr = open_array(dir);
  const std::int64_t n_chunks = (static_cast<std::int64_t>(n) + chunk - 1) / chunk;
  for (int k = 0; k < 100; ++k) {
    const std::int64_t count = 1 + static_cast<std::int64_t>(rng() % 30000);
    const std::int64_t start = static_cast<std::int64_t>(rng() % (n - count + 1));
    const std::int64_t first = start / chunk, last = (start + count - 1) / chunk;
    std::uint64_t expected = 0;
    for (std::int64_t i = first; i <= last; ++i) {
      expected += fs::file_size(dir / "data.zarr" / std::to_string(i));
    }
    IoStats s;
    const auto got = std::get<std::vector<float>>(read_window(zarr, start, count, &s));
    c.check(s.files_opened == static_cast<std::uint64_t>(last - first + 1),
            "chunk window opened " + std::to_string(s.files_opened.load()) + " files");
    c.check(s.bytes_read == expected, "chunk window bytes");
    c.check(got.front() == static_cast<float>(start) &&
                got.back() == static_cast<float>(start + count - 1),
            "chunk window values");
  }
  c.note("100 raw + 100 chunked windows over " + std::to_string(n_chunks) + " chunks");
}

void compression_direction(Checker& c) {
  auto sizes = [](SignalKind kind, int subjects, double duration,
                  const std::vector<BenchConfigRow>& rows, const fs::path& work) {
    SynthSpec spec;
    spec.n_subjects = subjects;
    spec.duration_sec = duration;
    spec.seed = 1;
    for (int i = 0; i < 4; ++i) spec.channels.push_back({"ch" + std::to_string(i + 1), 256.0, kind});
    BenchOptions opts;
    opts.work_dir = work;
    opts.rows = rows;
    const BenchReport r = run_bench(generate_synthetic_dataset(spec), opts);
    std::map<std::string, double> out;
    for (const auto& row : r.rows) out[row.format] = static_cast<double>(row.size_bytes);
    return out;
  };
  TempDir tmp("slf-acc");
  const auto q = sizes(SignalKind::int16_quantized, 2, 8192.0, default_bench_rows(), tmp / "q");
  const double raw = q.at("slf-raw"), z9 = q.at("slf-zstd9"), z22 = q.at("slf-zstd22");
  c.check(raw >= 64.0 * 1024 * 1024, "quantized dataset smaller than 64 MiB");
  c.check(z22 <= z9, "zstd22 larger than zstd9");
  c.check(z9 < raw, "zstd9 not smaller than raw");
  c.check(z9 / raw <= 0.60, "quantized zstd9/raw " + fmt("%.3f", z9 / raw));
  const auto g = sizes(SignalKind::gaussian_noise, 2, 1024.0,
                       {default_bench_rows()[0], default_bench_rows()[1]}, tmp / "g");
  const double gr = g.at("slf-zstd9") / g.at("slf-raw");
  c.check(gr >= 0.85, "gaussian zstd9/raw " + fmt("%.3f", gr));
  c.note("quantized raw " + fmt("%.0f", raw) + " B, zstd9/raw " + fmt("%.3f", z9 / raw) +
         ", zstd22/raw " + fmt("%.3f", z22 / raw) + "; gaussian zstd9/raw " + fmt("%.3f", gr));
}

void edf_correctness(Checker& c) {
  const json expected =
      json::parse(testutil::read_text(testutil::golden("edf/expected.json")));
  for (const auto& [file, e] : expected.items()) {
    const EdfFile edf = EdfFile::open(testutil::golden("edf/" + file), ParseMode::strict);
    const EdfHeader& h = edf.header();
    std::vector<Bytes> data;
    std::size_t k = 0;
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
      data.push_back(edf.read_signal_bytes(i));
      if (h.signals[i].is_annotation_channel) continue;
      const auto digital = edf.read_signal_digital(i);
      c.check(std::vector<int>(digital.begin(), digital.end()) ==
                  e["signals"][k]["digital"].get<std::vector<int>>(),
              file + " digital samples of signal " + std::to_string(i));
      const auto phys = e["signals"][k++]["physical"].get<std::vector<double>>();
      const auto p = edf.read_signal_physical(i).values;
      bool same = p.size() == phys.size();
      for (std::size_t j = 0; same && j < phys.size(); ++j) same = p[j] == static_cast<float>(phys[j]);
      c.check(same, file + " physical samples of signal " + std::to_string(i));
    }
    // Write the parsed file back and parse it again.
    const EdfFile again = EdfFile::from_bytes(write_edf(h, data), ParseMode::strict);
    c.check(again.header() == h, file + " header after rewrite");
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
      c.check(again.read_signal_bytes(i) == data[i], file + " signal bytes after rewrite");
    }
  }

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dig(-32768, 32767);
  std::uniform_real_distribution<double> phys(-5000.0, 5000.0);
  int calibrations = 0;
  for (int k = 0; k < 10000; ++k) {
    EdfSignalHeader s;
    int a = dig(rng), b = dig(rng);
    while (a == b) b = dig(rng);
    s.digital_min = std::min(a, b);
    s.digital_max = std::max(a, b);
    s.physical_min = phys(rng);
    s.physical_max = phys(rng);
    const int d = std::uniform_int_distribution<int>(s.digital_min, s.digital_max)(rng);
    c.check(testutil::within_one_ulp(digital_to_physical(d, s), testutil::exact_physical(d, s)),
            "calibration " + std::to_string(k) + " beyond 1 ulp");
    ++calibrations;
  }

  int streams = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::string stream = testutil::random_tal_stream(rng);
    c.check(parse_tal_records(Bytes(stream.begin(), stream.end()), ParseMode::strict) ==
                testutil::split_tals(stream),
            "TAL stream " + std::to_string(k));
    ++streams;
  }
  c.note(std::to_string(expected.size()) + " fixtures, " + std::to_string(calibrations) +
         " calibrations, " + std::to_string(streams) + " TAL streams");
}

void validation_coverage(Checker& c) {
  struct Mutation {
    const char* what;
    const char* code;
    ArrayCodecSpec codec;
    std::function<void(const fs::path& subject)> apply;
  };
  auto edit_json = [](const fs::path& p, const std::function<void(json&)>& f) {
    json j = json::parse(testutil::read_text(p));
    f(j);
    testutil::write_text(p, j.dump(2) + "\n");
  };
  const std::vector<Mutation> mutations = {
      {"negative sampling rate", "nonpositive_sampling_rate", ArrayCodecSpec::raw(),
       [&](const fs::path& s) {
         edit_json(s / "eeg" / "attributes.json", [](json& j) { j["sampling_rate"] = -64.0; });
       }},
      {"mismatched map key", "key_mismatch", ArrayCodecSpec::raw(),
       [&](const fs::path& s) {
         edit_json(s / "metadata.json", [](json& j) { j["subject_id"] = "other"; });
       }},
      {"N4 stage", "invalid_annotation_name", ArrayCodecSpec::raw(),
       [&](const fs::path& s) {
         edit_json(s / "annotations" / "hypnogram.json",
                   [](json& j) { j["annotations"][0]["name"] = "N4"; });
       }},
      {"truncated data file", "truncated_payload", ArrayCodecSpec::raw(),
       [](const fs::path& s) { fs::resize_file(s / "eeg" / "data.npy", 200); }},
      {"shape/payload mismatch", "shape_mismatch", ArrayCodecSpec::raw(),
       [](const fs::path& s) {
         testutil::write_bytes(s / "eeg" / "data.npy",
                               encode_raw_array(std::vector<float>(639), ValueType::float32));
       }},
      {"bad magic", "bad_magic", ArrayCodecSpec::raw(),
       [](const fs::path& s) {
         Bytes b = testutil::read_bytes(s / "eeg" / "data.npy");
         b[1] = 'X';
         testutil::write_bytes(s / "eeg" / "data.npy", b);
       }},
      {"zstd level 23", "invalid_codec", ArrayCodecSpec::chunked(9, 100),
       [&](const fs::path& s) {
         edit_json(s / "eeg" / "data.zarr" / ".zarray",
                   [](json& j) { j["compressor"]["level"] = 23; });
       }},
      {"duplicate array name", "duplicate_name", ArrayCodecSpec::raw(),
       [](const fs::path& s) {
         fs::copy(s / "eeg", s / "eeg_copy", fs::copy_options::recursive);
       }},
      {"negative duration", "negative_duration", ArrayCodecSpec::raw(),
       [&](const fs::path& s) {
         edit_json(s / "annotations" / "hypnogram.json",
                   [](json& j) { j["annotations"][0]["duration_sec"] = -30.0; });
       }},
      {"non-JSON metadata", "bad_json", ArrayCodecSpec::raw(),
       [](const fs::path& s) { testutil::write_text(s / "metadata.json", "subject: s1\n"); }},
      {"corrupt chunk", "corrupt_chunk", ArrayCodecSpec::chunked(9, 100),
       [](const fs::path& s) {
         Bytes b = testutil::read_bytes(s / "eeg" / "data.zarr" / "2");
         b.resize(b.size() / 2);
         testutil::write_bytes(s / "eeg" / "data.zarr" / "2", b);
       }},
      {"value type mismatch", "dtype_mismatch", ArrayCodecSpec::raw(),
       [](const fs::path& s) {
         testutil::write_bytes(s / "eeg" / "data.npy",
                               encode_raw_array(std::vector<double>(640), ValueType::float64));
       }},
  };

  int detected = 0;
  for (const auto& m : mutations) {
    TempDir tmp("slf-acc");
    Dataset ds;
    ds.name = "d";
    Series series;
    series.name = "a";
    Subject sub;
    sub.metadata.subject_id = "s1";
    std::vector<float> v(640);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) / 8.0f;
    sub.add_array(SampleArray::from_values("eeg", 64.0, v, "uV"));
    AnnotationSet hyp;
    hyp.name = "hypnogram";
    hyp.name_type = std::string(kAasmSleepStage);
    hyp.annotations = {{"W", 0.0, 5.0, {}}, {"N1", 5.0, 5.0, {}}};
    sub.add_annotation_set(hyp);
    series.add_subject(sub);
    ds.add_series(series);
    write_dataset(ds, tmp.path(), {m.codec});
    c.check(check_dataset(tmp / "d").empty(), std::string(m.what) + ": clean copy has issues");
    m.apply(tmp / "d" / "a" / "s1");

    std::ostringstream out, err;
    const int status = run_cli({"validate", (tmp / "d").string()}, out, err);
    const bool by_validate = status == kExitDomainFailure &&
                             out.str().find(std::string(" ") + m.code + " ") != std::string::npos;
    bool by_read = false;
    try {
      read_dataset(tmp / "d", eager_options());
    } catch (const ValidationError& e) {
      by_read = has_error(e.issues(), m.code);
    } catch (const Error& e) {
      by_read = e.code() == m.code;
    }
    c.check(by_validate || by_read, std::string(m.what) + " not reported as " + m.code);
    c.check(has_error(check_dataset(tmp / "d"), m.code),
            std::string(m.what) + " missing from check_dataset");
    if (by_validate || by_read) ++detected;
  }
  c.note(std::to_string(detected) + "/" + std::to_string(mutations.size()) +
         " mutations detected");
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

void extractor(Checker& c) {
  TempDir tmp("slf-acc");
  std::mt19937_64 rng(77);
  Dataset ds;
  ds.name = "src";
  Series s;
  s.name = "night";
  for (const char* id : {"a", "b", "c"}) {
    Subject sub;
    sub.metadata.subject_id = id;
    for (ValueType t : testutil::kAllTypes) {
      sub.add_array(SampleArray::from_values("sig_" + std::string(to_string(t)), 64.0,
                                             testutil::random_values(rng, t, 6400)));
    }
    s.add_subject(sub);
  }
  ds.add_series(s);
  write_dataset(ds, tmp / "in", {ArrayCodecSpec::chunked(3, 1000)});
  const fs::path src = tmp / "in" / "src";
  const auto before = testutil::snapshot(src);

  ExtractConfig identity;
  identity.selections = {{std::string(kAllArrays), {}, {}, {}}};
  identity.output_codec = ArrayCodecSpec::raw();
  extract(src, identity, tmp / "out");
  c.check(read_dataset(tmp / "out" / "src", eager_options()) == ds,
          "identity extraction changed values");
  c.check(testutil::snapshot(src) == before, "source changed");

  ExtractConfig same_rate;
  same_rate.selections = {{std::string(kAllArrays), {}, 64.0, {}}};
  same_rate.dataset_name = "same";
  const ExtractReport r = extract(src, same_rate, tmp / "out");
  c.check(r.resampled.empty(), "factor 1 reported as resampled");
  c.check(read_dataset(tmp / "out" / "same", eager_options()).series.find("night")->subjects ==
              ds.series.find("night")->subjects,
          "factor 1 extraction not bit-exact");

  std::vector<double> noise(5000);
  std::normal_distribution<double> normal;
  for (auto& x : noise) x = normal(rng);
  for (int f : {2, 3, 4, 8}) {
    const auto out = decimate(std::span<const double>(noise), 1);
    c.check(out == noise, "decimate by 1 not bit-exact");
    for (double level : {-3.75, 0.0, 1.0, 1234.5}) {
      const std::vector<double> flat(4001, level);
      const auto d = decimate(std::span<const double>(flat), f);
      double worst = 0.0;
      for (double x : d) worst = std::max(worst, std::abs(x - level));
      c.check(worst < 1e-6, "DC gain at factor " + std::to_string(f) + " off by " +
                                fmt("%.3g", worst));
    }
  }
  const ArrayValues typed = testutil::random_values(rng, ValueType::int16, 777);
  c.check(bit_equal(decimate(typed, 1), typed), "typed decimate by 1 not bit-exact");

  std::vector<double> tone(64 * 60);
  for (std::size_t i = 0; i < tone.size(); ++i) {
    tone[i] = std::sin(2.0 * M_PI * 24.0 * static_cast<double>(i) / 64.0 + 0.7);
  }
  std::vector<double> subsampled;
  for (std::size_t i = 0; i < tone.size(); i += 4) subsampled.push_back(tone[i]);
  c.check(rms(subsampled) >= 0.5 * rms(tone), "tone vanishes without filtering");
  const auto down = decimate(std::span<const double>(tone), 4);
  const double ratio = rms(down) / rms(tone);
  c.check(ratio <= 0.1, "24 Hz tone RMS ratio " + fmt("%.4f", ratio));
  const auto taps = design_lowpass_fir(4);
  double stop = 0.0;
  for (double f = 0.25; f <= 0.5 + 1e-12; f += 0.001) stop = std::max(stop, fir_response(taps, f));
  c.check(20.0 * std::log10(stop) <= -20.0, "stopband above -20 dB");
  c.note("tone RMS ratio " + fmt("%.4f", ratio) + ", worst stopband " +
         fmt("%.1f", 20.0 * std::log10(stop)) + " dB");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.push_back("");
  return out;
}

void bench_harness(Checker& c) {
  TempDir tmp("slf-acc");
  const fs::path work = tmp / "work";
  std::ostringstream out, err;
  const int status = run_cli({"bench", "--work-dir", work.string(), "--subjects", "2",
                              "--duration", "600", "--channels", "3", "--rate", "128",
                              "--seed", "11", "--keep"},
                             out, err);
  c.check(status == kExitOk, "bench exit " + std::to_string(status) + ": " + err.str());
  if (status != kExitOk) return;

  std::istringstream csv_in(testutil::read_text(work / "bench.csv"));
  std::vector<std::string> csv;
  for (std::string line; std::getline(csv_in, line);) csv.push_back(line);
  c.check(!csv.empty() && csv[0] == kBenchCsvHeader, "CSV header");
  c.check(csv.size() == 4, "CSV row count");
  std::map<std::string, std::uint64_t> size;
  for (std::size_t i = 1; i < csv.size(); ++i) {
    const auto cells = split(csv[i], ',');
    c.check(cells.size() == 7, "CSV row width");
    if (cells.size() == 7) size[cells[0]] = std::stoull(cells[3]);
  }
  c.check(size.count("slf-raw") && size.count("slf-zstd9") && size.count("slf-zstd22"),
          "three scenarios");
  c.check(size["slf-zstd22"] <= size["slf-zstd9"] && size["slf-zstd9"] < size["slf-raw"],
          "size ordering");

  std::istringstream text(out.str());
  std::string line;
  while (std::getline(text, line) && line != "means") {
  }
  int means = 0;
  std::map<std::string, Dataset> kept;
  while (std::getline(text, line)) {
    std::istringstream words(line);
    std::string format, array, value;
    words >> format >> array >> value;
    const auto parts = split(array, '/');
    if (parts.size() != 3) {
      c.check(false, "mean line '" + line + "'");
      continue;
    }
    if (!kept.count(format)) {
      kept.emplace(format, read_dataset(work / format / "synthetic", eager_options()));
    }
    const auto values = to_double(kept.at(format)
                                      .series.find(parts[0])
                                      ->subjects.find(parts[1])
                                      ->sample_arrays.find(parts[2])
                                      ->values());
    double sum = 0.0;
    for (double x : values) sum += x;
    c.check(std::strtod(value.c_str(), nullptr) == sum / static_cast<double>(values.size()),
            "mean of " + format + " " + array);
    ++means;
  }
  c.check(means == 3 * 2 * 3, "mean count " + std::to_string(means));
  c.note(std::to_string(means) + " means matched, sizes " + std::to_string(size["slf-raw"]) +
         " > " + std::to_string(size["slf-zstd9"]) + " >= " + std::to_string(size["slf-zstd22"]));
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* title;
    double time_limit_s;
    void (*run)(Checker&);
  };
  const Criterion criteria[] = {
      {1, "round trip of 200 random datasets under both codecs", 60.0, round_trip},
      {2, "golden NPY, .zarray and standalone zstd chunk decoding", 0.0, golden_files},
      {3, "lazy window reads stay within their byte bounds", 0.0, lazy_reads},
      {4, "compression direction on synthetic profiles", 300.0, compression_direction},
      {5, "EDF fixtures, calibration and TAL parsing", 0.0, edf_correctness},
      {6, "seeded corruptions are detected with their codes", 0.0, validation_coverage},
      {7, "extractor losslessness and decimation filter", 30.0, extractor},
      {8, "benchmark harness table, CSV and means", 0.0, bench_harness},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checker c;
    const auto t0 = Clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(t0);
    if (cr.time_limit_s > 0.0) {
      c.check(elapsed < cr.time_limit_s,
              "took " + fmt("%.1f", elapsed) + " s, limit " + fmt("%.0f", cr.time_limit_s) + " s");
    }
    std::cout << (c.passed() ? "PASS" : "FAIL") << " criterion " << cr.number << ": "
              << cr.title << " (" << c.checks() << " checks, " << fmt("%.1f", elapsed) << " s";
    if (!c.notes().empty()) std::cout << "; " << c.notes();
    std::cout << ")\n";
    for (std::size_t i = 0; i < c.failures().size() && i < 10; ++i) {
      std::cout << "    " << c.failures()[i] << '\n';
    }
    if (!c.passed()) ++failed;
    std::cout.flush();
  }
  return failed == 0 ? 0 : 1;
}
