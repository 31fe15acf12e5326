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

#include "slf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "slf/error.hpp"
#include "slf/store.hpp"

namespace slf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string printf_string(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::vector<float> synth_channel(const SynthChannel& ch, std::int64_t n,
                                 std::uint64_t seed, int subject,
                                 int channel) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(subject),
                    static_cast<std::uint32_t>(channel)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::vector<float> out(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < out.size(); ++k) {
    switch (ch.kind) {
      case SignalKind::gaussian_noise:
        out[k] = static_cast<float>(normal(rng));
        break;
      case SignalKind::sine_plus_noise: {
        const double t = static_cast<double>(k) / ch.sampling_rate;
        out[k] = static_cast<float>(std::sin(2.0 * std::numbers::pi * t) +
                                    0.1 * normal(rng));
        break;
      }
      case SignalKind::int16_quantized: {
        const double d = std::clamp(std::round(normal(rng) * kQuantizationSigma),
                                    -32768.0, 32767.0);
        out[k] = static_cast<float>(d * kQuantizationGain);
        break;
      }
    }
  }
  return out;
}

AnnotationSet synth_hypnogram(double duration_sec) {
  constexpr double kEpoch = 30.0;
  AnnotationSet set;
  set.name = "hypnogram";
  set.name_type = std::string(kAasmSleepStage);
  for (std::size_t i = 0; kEpoch * static_cast<double>(i) < duration_sec; ++i) {
    const double start = kEpoch * static_cast<double>(i);
    set.annotations.push_back(
        {std::string(to_string(kAllSleepStages[i % 5])), start,
         std::min(kEpoch, duration_sec - start), {}});
  }
  return set;
}

std::string data_type_label(const std::set<ValueType>& types) {
  if (types.size() == 1) return std::string(to_string(*types.begin()));
  return types.empty() ? "-" : "mixed";
}

struct ReadResult {
  double seconds = 0.0;
  std::uint64_t bytes_read = 0;
  std::vector<ArrayMean> means;
};

ReadResult read_and_average(const fs::path& dataset_dir, unsigned workers) {
  ReadOptions opts;
  opts.stats = std::make_shared<IoStats>();
  const auto t0 = Clock::now();
  const Dataset d = read_dataset(dataset_dir, opts);
  std::vector<const SampleArray*> arrays;
  ReadResult out;
  for (const auto& [series_name, series] : d.series) {
    for (const auto& [subject_id, subject] : series.subjects) {
      for (const auto& [name, array] : subject.sample_arrays) {
        arrays.push_back(&array);
        out.means.push_back({series_name + "/" + subject_id + "/" + name, 0.0});
      }
    }
  }
  detail::parallel_for(arrays.size(), workers, [&](std::size_t i) {
    out.means[i].mean = array_mean(arrays[i]->values());
  });
  out.seconds = seconds_since(t0);
  out.bytes_read = opts.stats->bytes_read.load();
  return out;
}

fs::path fresh_copy(const fs::path& dir) {
  fs::path copy = dir;
  copy += ".cold";
  fs::remove_all(copy);
  fs::copy(dir, copy, fs::copy_options::recursive);
  return copy;
}

BenchRow measure_slf(const BenchConfigRow& config, const fs::path& dataset_dir,
                     double conversion_s, const std::string& data_type,
                     const BenchOptions& options) {
  BenchRow row;
  row.format = config.label;
  row.data_type = data_type;
  row.compression = config.codec.label();
  row.size_bytes = directory_size(dataset_dir);
  row.conversion_time_s = conversion_s;
  const fs::path read_dir = options.cold ? fresh_copy(dataset_dir) : dataset_dir;
  ReadResult r = read_and_average(read_dir, options.workers);
  if (options.cold) fs::remove_all(read_dir);
  row.read_time_s = r.seconds;
  row.bytes_read = r.bytes_read;
  const double moved = config.codec.kind == CodecKind::raw
                           ? static_cast<double>(row.size_bytes)
                           : static_cast<double>(r.bytes_read);
  row.read_speed_bps = r.seconds > 0.0 ? moved / r.seconds : 0.0;
  row.means = std::move(r.means);
  return row;
}

void prepare_work_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("io_error", "cannot create work directory " + dir.string());
  }
}

}  // namespace

std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::gaussian_noise: return "gaussian_noise";
    case SignalKind::sine_plus_noise: return "sine_plus_noise";
    case SignalKind::int16_quantized: return "int16_quantized";
  }
  return "?";
}

std::optional<SignalKind> parse_signal_kind(std::string_view text) {
  for (SignalKind k : {SignalKind::gaussian_noise, SignalKind::sine_plus_noise,
                       SignalKind::int16_quantized}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void SynthSpec::validate() const {
  const auto fail = [](const std::string& m) { throw Error("invalid_spec", m); };
  if (n_subjects < 1) fail("n_subjects must be positive");
  if (!(duration_sec > 0.0) || !std::isfinite(duration_sec)) {
    fail("duration_sec must be positive");
  }
  if (channels.empty()) fail("at least one channel is required");
  std::set<std::string> names;
  for (const auto& ch : channels) {
    if (!(ch.sampling_rate > 0.0) || !std::isfinite(ch.sampling_rate)) {
      fail("channel '" + ch.name + "' needs a positive sampling rate");
    }
    Issues issues;
    validate_entity_name(ch.name, "channels", issues);
    if (has_errors(issues)) fail("invalid channel name '" + ch.name + "'");
    if (!names.insert(ch.name).second) fail("duplicate channel '" + ch.name + "'");
  }
}

std::uint64_t SynthSpec::total_samples() const {
  std::uint64_t n = 0;
  for (const auto& ch : channels) {
    n += static_cast<std::uint64_t>(std::llround(duration_sec * ch.sampling_rate));
  }
  return n * static_cast<std::uint64_t>(n_subjects);
}

Dataset generate_synthetic_dataset(const SynthSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.name = spec.dataset_name;
  Series series;
  series.name = spec.series_name;
  for (int i = 0; i < spec.n_subjects; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "sub-%03d", i + 1);
    Subject subject;
    subject.metadata.subject_id = id;
    subject.metadata.recording_start = Timestamp::from_civil(2020, 1, 1, 22);
    for (std::size_t c = 0; c < spec.channels.size(); ++c) {
      const SynthChannel& ch = spec.channels[c];
      const auto n = std::llround(spec.duration_sec * ch.sampling_rate);
      subject.add_array(SampleArray::from_values(
          ch.name, ch.sampling_rate,
          ArrayValues(synth_channel(ch, n, spec.seed, i, static_cast<int>(c)))));
    }
    subject.add_annotation_set(synth_hypnogram(spec.duration_sec));
    series.add_subject(std::move(subject));
  }
  ds.add_series(std::move(series));
  return ds;
}

std::vector<BenchConfigRow> default_bench_rows() {
  return {{"slf-raw", ArrayCodecSpec::raw()},
          {"slf-zstd9", ArrayCodecSpec::chunked(9)},
          {"slf-zstd22", ArrayCodecSpec::chunked(22)}};
}

double array_mean(const ArrayValues& values) {
  return std::visit(
      [](const auto& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double sum = 0.0;
        for (auto x : v) sum += static_cast<double>(x);
        return sum / static_cast<double>(v.size());
      },
      values);
}

BenchReport run_bench(const Dataset& dataset, const BenchOptions& options) {
  prepare_work_dir(options.work_dir);
  std::set<ValueType> types;
  for (const auto& [_, series] : dataset.series) {
    for (const auto& [_, subject] : series.subjects) {
      for (const auto& [_, array] : subject.sample_arrays) {
        types.insert(array.attributes().value_type);
      }
    }
  }
  BenchReport report;
  report.workers = options.workers;
  report.cold = options.cold;
  for (const BenchConfigRow& config : options.rows) {
    const fs::path row_dir = options.work_dir / config.label;
    fs::remove_all(row_dir);
    WriteOptions wo{config.codec, true, options.workers};
    const auto t0 = Clock::now();
    write_dataset(dataset, row_dir, wo);
    const double conversion = seconds_since(t0);
    report.rows.push_back(measure_slf(config, row_dir / dataset.name,
                                      conversion, data_type_label(types),
                                      options));
    if (!options.keep) fs::remove_all(row_dir);
  }
  return report;
}

BenchReport run_bench_edf(const fs::path& edf_dir, const BenchOptions& options,
                          ParseMode mode) {
  prepare_work_dir(options.work_dir);
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(edf_dir, ec)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (ext == ".edf" && entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw Error("io_error", "cannot list " + edf_dir.string());
  if (files.empty()) {
    throw Error("empty_source_directory", "no .edf files in " + edf_dir.string());
  }
  std::sort(files.begin(), files.end());

  BenchReport report;
  report.workers = options.workers;
  report.cold = options.cold;

  BenchRow source;
  source.format = "edf";
  source.data_type = "int16";
  source.compression = "-";
  for (const auto& f : files) source.size_bytes += fs::file_size(f);
  std::vector<std::vector<ArrayMean>> per_file(files.size());
  const auto t0 = Clock::now();
  detail::parallel_for(files.size(), options.workers, [&](std::size_t i) {
    const EdfFile edf = EdfFile::open(files[i], mode);
    const Subject s =
        convert_edf_to_subject(edf, files[i].stem().string()).subject;
    for (const auto& [name, array] : s.sample_arrays) {
      per_file[i].push_back({"edf/" + files[i].stem().string() + "/" + name,
                             array_mean(array.values())});
    }
  });
  source.read_time_s = seconds_since(t0);
  source.bytes_read = source.size_bytes;
  source.read_speed_bps = source.read_time_s > 0.0
                              ? static_cast<double>(source.size_bytes) /
                                    source.read_time_s
                              : 0.0;
  for (auto& m : per_file) {
    source.means.insert(source.means.end(), m.begin(), m.end());
  }
  report.rows.push_back(std::move(source));

  for (const BenchConfigRow& config : options.rows) {
    const fs::path row_dir = options.work_dir / config.label;
    fs::remove_all(row_dir);
    ConvertOptions co;
    co.dataset_name = "edf";
    co.series_name = "edf";
    co.codec = config.codec;
    co.mode = mode;
    co.overwrite = true;
    co.workers = options.workers;
    const ConversionReport conv = convert_directory(edf_dir, row_dir, co);
    report.rows.push_back(measure_slf(config, conv.dataset_dir,
                                      conv.elapsed_sec, "float32", options));
    if (!options.keep) fs::remove_all(row_dir);
  }
  return report;
}

namespace {

std::vector<std::string> row_cells(const BenchRow& row) {
  return {row.format,
          row.data_type,
          row.compression,
          std::to_string(row.size_bytes),
          row.conversion_time_s ? printf_string("%.6f", *row.conversion_time_s)
                                : std::string(),
          printf_string("%.6f", row.read_time_s),
          printf_string("%.1f", row.read_speed_bps)};
}

}  // namespace

std::string bench_csv(const BenchReport& report) {
  std::string out(kBenchCsvHeader);
  out += '\n';
  for (const auto& row : report.rows) {
    const auto cells = row_cells(row);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }
  return out;
}

std::string bench_table(const BenchReport& report) {
  std::vector<std::vector<std::string>> grid{
      {"Format", "Data type", "Compression", "Size (bytes)",
       "Conversion time (s)", "Read time (s)", "Read speed (B/s)"}};
  for (const auto& row : report.rows) {
    auto cells = row_cells(row);
    if (cells[4].empty()) cells[4] = "-";
    grid.push_back(std::move(cells));
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& cells : grid) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      width[i] = std::max(width[i], cells[i].size());
    }
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      const std::string& cell = grid[r][i];
      const std::string pad(width[i] - cell.size(), ' ');
      // Text columns left-aligned, numbers right-aligned.
      out << (i ? "  " : "") << (i < 3 ? cell + pad : pad + cell);
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace slf
