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

#include "slf/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "json_model.hpp"
#include "slf/bench.hpp"
#include "slf/edf.hpp"
#include "slf/error.hpp"
#include "slf/extract.hpp"
#include "slf/store.hpp"

namespace slf {

namespace {

using json::Json;

struct Globals {
  bool quiet = false;
  bool json = false;
};

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  o << text;
  if (!o) throw Error("io_error", "cannot write " + path.string());
}

Json issue_json(const ValidationIssue& issue) {
  return Json{{"path", issue.path},
              {"severity", std::string(to_string(issue.severity))},
              {"code", issue.code},
              {"message", issue.message}};
}

// Maps an exception escaping a command to its exit status.
int report_failure(std::ostream& err) {
  try {
    throw;
  } catch (const ValidationError& e) {
    for (const auto& issue : e.issues()) err << format_issue(issue) << '\n';
    err << "error: " << e.code() << ": " << e.what() << '\n';
    return kExitDomainFailure;
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << '\n';
    return e.is_environmental() ? kExitEnvironmentFailure : kExitDomainFailure;
  } catch (const std::exception& e) {
    err << "error: io_error: " << e.what() << '\n';
    return kExitEnvironmentFailure;
  }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const Globals& g, const fs::path& path, std::ostream& out) {
  const Issues issues = check_dataset(path);
  const std::size_t errors = count_errors(issues);
  const std::size_t warnings = issues.size() - errors;
  if (g.json) {
    Json list = Json::array();
    for (const auto& i : issues) list.push_back(issue_json(i));
    out << json::dump(Json{{"path", path.string()},
                           {"valid", errors == 0},
                           {"errors", errors},
                           {"warnings", warnings},
                           {"issues", std::move(list)}});
  } else {
    for (const auto& i : issues) out << format_issue(i) << '\n';
    if (!g.quiet) {
      out << path.string() << ": " << errors << " errors, " << warnings
          << " warnings\n";
    }
  }
  return errors == 0 ? kExitOk : kExitDomainFailure;
}

// ---------------------------------------------------------------------------
// info
// ---------------------------------------------------------------------------

int cmd_info(const Globals& g, const fs::path& path, std::ostream& out) {
  IoStats stats;
  const DatasetSummary summary = list_dataset(path, &stats);
  if (g.json) {
    Json series = Json::array();
    for (const auto& s : summary.series) {
      Json subjects = Json::array();
      for (const auto& sub : s.subjects) {
        Json arrays = Json::array();
        for (const auto& a : sub.arrays) {
          arrays.push_back(Json{{"name", a.name},
                                {"sampling_rate", a.sampling_rate},
                                {"n_samples", a.n_samples},
                                {"value_type", std::string(to_string(a.value_type))},
                                {"duration_sec", a.n_samples / a.sampling_rate},
                                {"start_offset", a.start_offset}});
        }
        subjects.push_back(Json{{"subject_id", sub.subject_id},
                                {"arrays", std::move(arrays)},
                                {"annotation_sets", sub.annotation_sets}});
      }
      series.push_back(Json{{"name", s.name}, {"subjects", std::move(subjects)}});
    }
    out << json::dump(Json{{"name", summary.name},
                           {"n_series", summary.series.size()},
                           {"n_subjects", summary.n_subjects()},
                           {"series", std::move(series)},
                           {"bytes_read", stats.bytes_read.load()},
                           {"files_opened", stats.files_opened.load()}});
    return kExitOk;
  }
  out << "dataset " << summary.name << ": " << summary.series.size()
      << " series, " << summary.n_subjects() << " subjects\n";
  for (const auto& s : summary.series) {
    out << "series " << s.name << ": " << s.subjects.size() << " subjects\n";
    for (const auto& sub : s.subjects) {
      out << "  subject " << sub.subject_id << '\n';
      for (const auto& a : sub.arrays) {
        out << "    array " << a.name << "  " << shortest(a.sampling_rate)
            << " Hz  " << fixed3(a.n_samples / a.sampling_rate) << " s  "
            << a.n_samples << " samples  " << to_string(a.value_type) << '\n';
      }
      if (!sub.annotation_sets.empty()) {
        out << "    annotations";
        for (const auto& name : sub.annotation_sets) out << ' ' << name;
        out << '\n';
      }
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------------

struct ConvertArgs {
  std::string src;
  std::string dest;
  std::string dataset;
  std::string series{"edf"};
  std::string codec{"raw"};
  int level = kDefaultZstdLevel;
  std::int64_t chunk_len = 0;
  std::string mode{"lenient"};
  std::string mapping;
  unsigned workers = 1;
  bool overwrite = false;
};

ArrayCodecSpec codec_from_flags(const std::string& codec, int level,
                                std::int64_t chunk_len) {
  if (codec == "raw") return ArrayCodecSpec::raw();
  ArrayCodecSpec spec = ArrayCodecSpec::chunked(level);
  if (chunk_len > 0) spec.chunk_len = chunk_len;
  spec.validate();
  return spec;
}

int cmd_convert(const Globals& g, const ConvertArgs& a, std::ostream& out,
                std::ostream& err) {
  ConvertOptions opts;
  opts.dataset_name = a.dataset.empty()
                          ? fs::path(a.src).lexically_normal().filename().string()
                          : a.dataset;
  if (opts.dataset_name.empty()) {
    opts.dataset_name = fs::absolute(a.src).parent_path().filename().string();
  }
  opts.series_name = a.series;
  opts.codec = codec_from_flags(a.codec, a.level, a.chunk_len);
  opts.mode = *parse_parse_mode(a.mode);
  if (!a.mapping.empty()) {
    opts.mapping = AnnotationMapping::from_json(read_text(a.mapping));
  }
  opts.overwrite = a.overwrite;
  opts.workers = a.workers;

  const ConversionReport r = convert_directory(a.src, a.dest, opts);
  if (!g.quiet && !g.json) {
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  }
  if (g.json) {
    Json skipped = Json::array();
    for (const auto& s : r.skipped) {
      skipped.push_back(Json{{"file", s.path.string()},
                             {"code", s.code},
                             {"reason", s.reason}});
    }
    out << json::dump(Json{{"dataset_dir", r.dataset_dir.string()},
                           {"converted", r.converted},
                           {"skipped", std::move(skipped)},
                           {"warnings", r.warnings},
                           {"arrays", r.written.arrays},
                           {"annotation_sets", r.written.annotation_sets},
                           {"total_bytes", r.written.total_bytes},
                           {"workers", a.workers},
                           {"conversion_time_s", r.elapsed_sec}});
  } else {
    for (const auto& s : r.skipped) {
      out << "skipped " << s.path.filename().string() << ": " << s.code << ": "
          << s.reason << '\n';
    }
    if (!g.quiet) {
      out << "converted " << r.converted << " of "
          << r.converted + r.skipped.size() << " files into "
          << r.dataset_dir.string() << '\n';
      out << "conversion time: " << fixed3(r.elapsed_sec) << " s\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

int cmd_extract(const Globals& g, const std::string& config_path,
                const std::string& src, const std::string& dest,
                bool overwrite, unsigned workers, std::ostream& out,
                std::ostream& err) {
  ExtractConfig cfg = ExtractConfig::from_json(read_text(config_path));
  cfg.overwrite = overwrite;
  cfg.workers = workers;
  const ExtractReport r = extract(src, cfg, dest);
  if (!g.quiet && !g.json) {
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  }
  if (g.json) {
    Json resampled = Json::array();
    for (const auto& x : r.resampled) {
      resampled.push_back(Json{{"series", x.series},
                               {"subject", x.subject},
                               {"array", x.array},
                               {"factor", x.factor}});
    }
    out << json::dump(Json{{"dataset_dir", r.dataset_dir.string()},
                           {"subjects_processed", r.subjects_processed},
                           {"arrays_written", r.arrays_written},
                           {"resampled", std::move(resampled)},
                           {"warnings", r.warnings}});
  } else if (!g.quiet) {
    out << "extracted " << r.subjects_processed << " subjects, "
        << r.arrays_written << " arrays into " << r.dataset_dir.string() << '\n';
    for (const auto& x : r.resampled) {
      out << "resampled " << x.series << '/' << x.subject << '/' << x.array
          << " by " << x.factor << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string work_dir;
  int subjects = 2;
  double duration = 600.0;
  int n_channels = 4;
  double rate = 256.0;
  std::string profile{"int16_quantized"};
  std::vector<std::string> channels;
  std::uint64_t seed = 0;
  std::string edf_dir;
  std::string mode{"lenient"};
  std::string csv;
  unsigned workers = 1;
  bool cold = false;
  bool keep = false;
};

SynthChannel parse_channel(const std::string& text) {
  // name:rate:kind
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos) {
    throw Error("invalid_spec", "channel '" + text + "' is not name:rate:kind");
  }
  SynthChannel ch;
  ch.name = text.substr(0, a);
  const std::string rate = text.substr(a + 1, b - a - 1);
  auto [ptr, ec] = std::from_chars(rate.data(), rate.data() + rate.size(),
                                   ch.sampling_rate);
  if (ec != std::errc() || ptr != rate.data() + rate.size()) {
    throw Error("invalid_spec", "bad sampling rate in '" + text + "'");
  }
  auto kind = parse_signal_kind(text.substr(b + 1));
  if (!kind) throw Error("invalid_spec", "unknown signal kind in '" + text + "'");
  ch.kind = *kind;
  return ch;
}

int cmd_bench(const Globals& g, const BenchArgs& a, std::ostream& out) {
  BenchOptions opts;
  opts.work_dir = a.work_dir;
  opts.workers = a.workers;
  opts.cold = a.cold;
  opts.keep = a.keep;

  BenchReport report;
  if (!a.edf_dir.empty()) {
    report = run_bench_edf(a.edf_dir, opts, *parse_parse_mode(a.mode));
  } else {
    SynthSpec spec;
    spec.n_subjects = a.subjects;
    spec.duration_sec = a.duration;
    spec.seed = a.seed;
    if (a.channels.empty()) {
      const SignalKind kind = *parse_signal_kind(a.profile);
      for (int i = 0; i < a.n_channels; ++i) {
        spec.channels.push_back({"ch" + std::to_string(i + 1), a.rate, kind});
      }
    } else {
      for (const auto& c : a.channels) spec.channels.push_back(parse_channel(c));
    }
    report = run_bench(generate_synthetic_dataset(spec), opts);
  }

  const std::string csv = bench_csv(report);
  const fs::path csv_path = a.csv.empty() ? opts.work_dir / "bench.csv" : fs::path(a.csv);
  write_text(csv_path, csv);

  if (g.json) {
    Json rows = Json::array();
    for (const auto& r : report.rows) {
      Json means = Json::array();
      for (const auto& m : r.means) {
        means.push_back(Json{{"array", m.array}, {"mean", m.mean}});
      }
      rows.push_back(Json{{"format", r.format},
                          {"data_type", r.data_type},
                          {"compression", r.compression},
                          {"size_bytes", r.size_bytes},
                          {"conversion_time_s", r.conversion_time_s
                                                    ? Json(*r.conversion_time_s)
                                                    : Json(nullptr)},
                          {"read_time_s", r.read_time_s},
                          {"read_speed_bps", r.read_speed_bps},
                          {"bytes_read", r.bytes_read},
                          {"means", std::move(means)}});
    }
    out << json::dump(Json{{"workers", report.workers},
                           {"cold", report.cold},
                           {"csv", csv_path.string()},
                           {"rows", std::move(rows)}});
    return kExitOk;
  }
  out << bench_table(report);
  if (!g.quiet) {
    out << "\nworkers: " << report.workers << '\n';
    out << (report.cold
                ? "note: reads used fresh copies of each dataset; the OS cache "
                  "was not dropped\n"
                : "note: wall times include OS file caching; use --cold to "
                  "read from fresh copies\n");
    out << "csv: " << csv_path.string() << "\n\nmeans\n";
    for (const auto& r : report.rows) {
      for (const auto& m : r.means) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", m.mean);
        out << r.format << ' ' << m.array << ' ' << buf << '\n';
      }
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Sleeplab format datasets: validate, inspect, convert, "
               "extract and benchmark",
               "slf"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--quiet,-q", g.quiet, "Only print results and errors");
  app.add_flag("--json", g.json, "Print machine-readable JSON reports");

  std::string path;
  auto* validate = app.add_subcommand("validate", "Check a dataset, exit 1 on errors");
  validate->add_option("path", path, "Dataset directory")->required();
  auto* info = app.add_subcommand("info", "Summarize a dataset from its metadata");
  info->add_option("path", path, "Dataset directory")->required();

  ConvertArgs conv;
  auto* convert = app.add_subcommand("convert", "Convert a directory of EDF files");
  convert->add_option("src", conv.src, "Directory holding *.edf files")->required();
  convert->add_option("dest", conv.dest, "Destination root")->required();
  convert->add_option("--dataset", conv.dataset, "Dataset name (default: source directory name)");
  convert->add_option("--series", conv.series, "Series name")->capture_default_str();
  convert->add_option("--codec", conv.codec, "raw or zstd")
      ->check(CLI::IsMember({"raw", "zstd"}))
      ->capture_default_str();
  convert->add_option("--level", conv.level, "Zstandard level")
      ->check(CLI::Range(kMinZstdLevel, kMaxZstdLevel))
      ->capture_default_str();
  convert->add_option("--chunk-len", conv.chunk_len, "Samples per chunk")
      ->check(CLI::PositiveNumber);
  convert->add_option("--mode", conv.mode, "strict or lenient")
      ->check(CLI::IsMember({"strict", "lenient"}))
      ->capture_default_str();
  convert->add_option("--mapping", conv.mapping, "Annotation mapping JSON file");
  convert->add_option("--workers", conv.workers, "Files converted in parallel")
      ->check(CLI::PositiveNumber);
  convert->add_flag("--overwrite", conv.overwrite, "Replace an existing dataset");

  std::string config, src, dest;
  bool overwrite = false;
  unsigned workers = 1;
  auto* ext = app.add_subcommand("extract", "Write a filtered, preprocessed copy");
  ext->add_option("config", config, "Extraction config JSON file")->required();
  ext->add_option("src", src, "Source dataset directory")->required();
  ext->add_option("dest", dest, "Destination root")->required();
  ext->add_flag("--overwrite", overwrite, "Replace an existing dataset");
  ext->add_option("--workers", workers, "Subjects processed in parallel")
      ->check(CLI::PositiveNumber);

  BenchArgs b;
  auto* bench = app.add_subcommand("bench", "Measure size, conversion and read time per codec");
  bench->add_option("--work-dir", b.work_dir, "Scratch directory")->required();
  bench->add_option("--subjects", b.subjects, "Synthetic subjects")
      ->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--duration", b.duration, "Seconds per subject")
      ->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--channels", b.n_channels, "Channels per subject")
      ->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--rate", b.rate, "Sampling rate of every channel (Hz)")
      ->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--profile", b.profile, "Signal kind of every channel")
      ->check(CLI::IsMember({"gaussian_noise", "sine_plus_noise", "int16_quantized"}))
      ->capture_default_str();
  bench->add_option("--channel", b.channels, "name:rate:kind, repeatable; replaces --channels");
  bench->add_option("--seed", b.seed, "Random seed")->capture_default_str();
  bench->add_option("--edf-dir", b.edf_dir, "Benchmark these EDF files instead");
  bench->add_option("--mode", b.mode, "EDF parse mode")
      ->check(CLI::IsMember({"strict", "lenient"}))
      ->capture_default_str();
  bench->add_option("--csv", b.csv, "CSV output path (default: <work-dir>/bench.csv)");
  bench->add_option("--workers", b.workers, "Subjects processed in parallel")
      ->check(CLI::PositiveNumber);
  bench->add_flag("--cold", b.cold, "Read from a fresh copy of each dataset");
  bench->add_flag("--keep", b.keep, "Keep the written datasets");

  std::vector<const char*> argv{"slf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitEnvironmentFailure;
  }

  try {
    if (validate->parsed()) return cmd_validate(g, path, out);
    if (info->parsed()) return cmd_info(g, path, out);
    if (convert->parsed()) return cmd_convert(g, conv, out, err);
    if (ext->parsed()) {
      return cmd_extract(g, config, src, dest, overwrite, workers, out, err);
    }
    if (bench->parsed()) return cmd_bench(g, b, out);
  } catch (...) {
    return report_failure(err);
  }
  return kExitDomainFailure;
}

}  // namespace slf
