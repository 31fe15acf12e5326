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

#include "slf/edf.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>

#include "json_model.hpp"
#include "parallel.hpp"
#include "slf/error.hpp"

namespace slf {

namespace {

constexpr std::size_t kFixedHeaderBytes = 256;
constexpr std::size_t kSignalHeaderBytes = 256;

std::string_view as_chars(ByteView bytes, std::size_t offset, std::size_t n) {
  return {reinterpret_cast<const char*>(bytes.data()) + offset, n};
}

std::string trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\0'; };
  auto first = std::find_if(s.begin(), s.end(), not_space);
  auto last = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return first < last ? std::string(first, last) : std::string();
}

std::optional<std::int64_t> parse_integer(std::string_view s) {
  if (s.starts_with('+')) s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_decimal(std::string_view s, bool allow_comma) {
  std::string text(s);
  if (allow_comma) std::replace(text.begin(), text.end(), ',', '.');
  std::string_view v = text;
  if (v.starts_with('+')) v.remove_prefix(1);
  std::size_t digits_at = v.starts_with('-') ? 1 : 0;
  if (v.size() <= digits_at) return std::nullopt;
  const char lead = v[digits_at];
  if (!std::isdigit(static_cast<unsigned char>(lead)) && lead != '.') {
    return std::nullopt;
  }
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    return std::nullopt;
  }
  return out;
}

// "dd.mm.yy" or "hh.mm.ss" as three numbers. Strict mode requires '.'
// separators and two digits per part.
std::optional<std::array<int, 3>> parse_triplet(std::string_view s,
                                                bool strict) {
  std::array<int, 3> out{};
  if (strict) {
    if (s.size() != 8 || s[2] != '.' || s[5] != '.') return std::nullopt;
    for (int i = 0; i < 3; ++i) {
      const char a = s[3 * i], b = s[3 * i + 1];
      if (!std::isdigit(static_cast<unsigned char>(a)) ||
          !std::isdigit(static_cast<unsigned char>(b))) {
        return std::nullopt;
      }
      out[i] = (a - '0') * 10 + (b - '0');
    }
    return out;
  }
  int part = 0;
  bool in_number = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      if (part > 2) return std::nullopt;
      out[part] = out[part] * 10 + (c - '0');
      if (out[part] > 9999) return std::nullopt;
      in_number = true;
    } else if (in_number) {
      ++part;
      in_number = false;
    }
  }
  if (in_number) ++part;
  if (part != 3) return std::nullopt;
  return out;
}

std::optional<Timestamp> parse_start(std::string_view date,
                                     std::string_view time, bool strict) {
  auto d = parse_triplet(date, strict);
  auto t = parse_triplet(time, strict);
  if (!d || !t) return std::nullopt;
  const int yy = (*d)[2];
  if (yy > 99) return std::nullopt;
  const int year = yy >= 85 ? 1900 + yy : 2000 + yy;
  const std::chrono::year_month_day ymd{
      std::chrono::year(year), std::chrono::month(unsigned((*d)[1])),
      std::chrono::day(unsigned((*d)[0]))};
  if (!ymd.ok() || (*t)[0] > 23 || (*t)[1] > 59 || (*t)[2] > 59) {
    return std::nullopt;
  }
  return Timestamp::from_civil(year, unsigned((*d)[1]), unsigned((*d)[0]),
                               unsigned((*t)[0]), unsigned((*t)[1]),
                               unsigned((*t)[2]));
}

class HeaderReader {
 public:
  HeaderReader(ParseMode mode, Warnings& warnings)
      : strict_(mode == ParseMode::strict), warnings_(warnings) {}

  bool strict() const { return strict_; }

  void fail_or_warn(const std::string& code, const std::string& message) {
    if (strict_) throw Error(code, message);
    warnings_.push_back(message);
  }

  std::optional<std::int64_t> integer(const std::string& text,
                                      const std::string& field) {
    if (auto v = parse_integer(text)) return v;
    fail_or_warn("malformed_numeric_field",
                 field + ": '" + text + "' is not an integer");
    return std::nullopt;
  }

  std::optional<double> decimal(const std::string& text,
                                const std::string& field) {
    if (auto v = parse_decimal(text, !strict_)) return v;
    fail_or_warn("malformed_numeric_field",
                 field + ": '" + text + "' is not a number");
    return std::nullopt;
  }

 private:
  bool strict_;
  Warnings& warnings_;
};

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_fixed(double v) {
  char buf[512];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v,
                                 std::chars_format::fixed);
  if (ec != std::errc()) throw Error("field_overflow", "number too long");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// UTF-8
// ---------------------------------------------------------------------------

// Length of the valid UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_sequence(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) {
    return static_cast<unsigned char>(s[i + k]);
  };
  const unsigned char c = b(0);
  if (c < 0x80) return 1;
  std::size_t n = 0;
  std::uint32_t cp = 0;
  if ((c & 0xE0) == 0xC0) {
    n = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    n = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    n = 4;
    cp = c & 0x07;
  } else {
    return 0;
  }
  if (i + n > s.size()) return 0;
  for (std::size_t k = 1; k < n; ++k) {
    if ((b(k) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b(k) & 0x3F);
  }
  static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[n] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return 0;
  }
  return n;
}

bool is_valid_utf8(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t n = utf8_sequence(s, i);
    if (n == 0) return false;
    i += n;
  }
  return true;
}

std::string replace_invalid_utf8(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t n = utf8_sequence(s, i);
    if (n == 0) {
      out += "\xEF\xBF\xBD";
      ++i;
    } else {
      out.append(s.substr(i, n));
      i += n;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// TAL
// ---------------------------------------------------------------------------

constexpr char kTalDuration = 0x15;
constexpr char kTalSeparator = 0x14;

std::optional<double> parse_tal_number(std::string_view s, bool signed_form,
                                       bool require_sign) {
  bool negative = false;
  if (signed_form && !s.empty() && (s[0] == '+' || s[0] == '-')) {
    negative = s[0] == '-';
    s.remove_prefix(1);
  } else if (require_sign) {
    return std::nullopt;
  }
  if (s.empty()) return std::nullopt;
  bool digit = false;
  bool dot = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      return std::nullopt;
    }
  }
  if (!digit) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v,
                                   std::chars_format::fixed);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return negative ? -v : v;
}

class TalParser {
 public:
  TalParser(std::string_view bytes, ParseMode mode, Warnings& warnings)
      : s_(bytes), strict_(mode == ParseMode::strict), warnings_(warnings) {}

  std::vector<TalAnnotation> run() {
    std::vector<TalAnnotation> out;
    while (pos_ < s_.size()) {
      if (s_[pos_] == '\0') {
        ++pos_;
        continue;
      }
      const std::size_t start = pos_;
      try {
        TalAnnotation tal = one();
        if (!tal.texts.empty()) out.push_back(std::move(tal));
      } catch (const Error& e) {
        if (strict_) throw;
        warnings_.push_back(std::string(e.what()) + "; skipped");
        const std::size_t nul = s_.find('\0', std::max(start, pos_));
        pos_ = nul == std::string_view::npos ? s_.size() : nul;
      }
    }
    return out;
  }

 private:
  [[noreturn]] void malformed(const std::string& what) const {
    throw Error("malformed_tal",
                "TAL at byte " + std::to_string(pos_) + ": " + what);
  }

  // Field up to (not including) one of `stops`; fails on NUL or end.
  std::string_view field(std::string_view stops) {
    const std::size_t begin = pos_;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '\0') break;
      if (stops.find(c) != std::string_view::npos) {
        return s_.substr(begin, pos_ - begin);
      }
      ++pos_;
    }
    malformed("unterminated TAL");
  }

  TalAnnotation one() {
    TalAnnotation tal;
    const std::string_view onset = field({"\x14\x15", 2});
    auto on = parse_tal_number(onset, true, strict_);
    if (!on) malformed("onset '" + std::string(onset) + "' is not a number");
    tal.onset_sec = *on;
    if (s_[pos_] == kTalDuration) {
      ++pos_;
      const std::string_view dur = field({"\x14", 1});
      auto d = parse_tal_number(dur, false, false);
      if (!d) malformed("duration '" + std::string(dur) + "' is not a number");
      tal.duration_sec = *d;
    }
    ++pos_;  // separator after onset/duration
    for (;;) {
      if (pos_ >= s_.size()) malformed("unterminated TAL");
      if (s_[pos_] == '\0') {
        ++pos_;
        break;
      }
      const std::string_view text = field({"\x14", 1});
      ++pos_;
      if (text.empty()) continue;
      if (is_valid_utf8(text)) {
        tal.texts.emplace_back(text);
      } else if (strict_) {
        malformed("text is not valid UTF-8");
      } else {
        warnings_.push_back("TAL text with invalid UTF-8 replaced");
        tal.texts.push_back(replace_invalid_utf8(text));
      }
    }
    return tal;
  }

  std::string_view s_;
  bool strict_;
  Warnings& warnings_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Patient id
// ---------------------------------------------------------------------------

std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<std::chrono::year_month_day> parse_edf_plus_date(
    std::string_view s) {
  static constexpr std::string_view kMonths[] = {
      "JAN", "FEB", "MAR", "APR", "MAY", "JUN",
      "JUL", "AUG", "SEP", "OCT", "NOV", "DEC"};
  if (s.size() != 11 || s[2] != '-' || s[6] != '-') return std::nullopt;
  auto day = parse_integer(s.substr(0, 2));
  auto year = parse_integer(s.substr(7, 4));
  std::string mon(s.substr(3, 3));
  for (char& c : mon) c = char(std::toupper(static_cast<unsigned char>(c)));
  unsigned month = 0;
  for (unsigned i = 0; i < 12; ++i) {
    if (kMonths[i] == mon) month = i + 1;
  }
  if (!day || !year || month == 0) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year(int(*year)),
                                  std::chrono::month(month),
                                  std::chrono::day(unsigned(*day))};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  Bytes out;
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw Error("io_error", "cannot read " + path.string());
  out.resize(static_cast<std::size_t>(size));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!in) throw Error("io_error", "cannot read " + path.string());
  return out;
}

void put_field(Bytes& out, std::string_view value, std::size_t width,
               std::string_view name) {
  if (value.size() > width) {
    throw Error("field_overflow", std::string(name) + " value '" +
                                      std::string(value) + "' exceeds " +
                                      std::to_string(width) + " bytes");
  }
  out.insert(out.end(), value.begin(), value.end());
  out.insert(out.end(), width - value.size(), ' ');
}

std::string two_digits(unsigned v) {
  return {char('0' + v / 10 % 10), char('0' + v % 10)};
}

}  // namespace

std::string_view to_string(ParseMode mode) {
  return mode == ParseMode::strict ? "strict" : "lenient";
}

std::optional<ParseMode> parse_parse_mode(std::string_view text) {
  if (text == "strict") return ParseMode::strict;
  if (text == "lenient") return ParseMode::lenient;
  return std::nullopt;
}

std::int64_t EdfHeader::record_bytes() const {
  std::int64_t n = 0;
  for (const auto& s : signals) n += std::int64_t{s.samples_per_record} * 2;
  return n;
}

// ---------------------------------------------------------------------------
// Header
// ---------------------------------------------------------------------------

EdfHeader parse_edf_header(ByteView bytes, ParseMode mode,
                           Warnings* warnings) {
  Warnings local;
  HeaderReader rd(mode, warnings ? *warnings : local);
  if (bytes.size() < kFixedHeaderBytes) {
    throw Error("truncated_header", "EDF header needs 256 bytes, got " +
                                        std::to_string(bytes.size()));
  }
  const auto at = [&](std::size_t off, std::size_t len) {
    return trim(as_chars(bytes, off, len));
  };

  EdfHeader h;
  h.version = at(0, 8);
  h.patient_id = at(8, 80);
  h.recording_id = at(88, 80);
  const std::string date = at(168, 8);
  const std::string time = at(176, 8);
  const std::string header_bytes = at(184, 8);
  h.reserved = at(192, 44);
  const std::string n_records = at(236, 8);
  const std::string duration = at(244, 8);
  const std::string n_signals = at(252, 4);

  if (h.version != "0") {
    (warnings ? *warnings : local)
        .push_back("version field is '" + h.version + "', expected '0'");
  }

  auto ns = parse_integer(n_signals);
  if (!ns || *ns < 1) {
    throw Error("malformed_numeric_field",
                "n_signals: '" + n_signals + "' is not a positive integer");
  }
  h.n_signals = static_cast<int>(std::min<std::int64_t>(*ns, 1 << 20));
  const std::size_t nsig = static_cast<std::size_t>(h.n_signals);
  const std::size_t expected = kFixedHeaderBytes + kSignalHeaderBytes * nsig;
  if (bytes.size() < expected) {
    throw Error("truncated_header",
                "EDF header with " + std::to_string(nsig) + " signals needs " +
                    std::to_string(expected) + " bytes, got " +
                    std::to_string(bytes.size()));
  }

  if (auto t = parse_start(date, time, rd.strict())) {
    h.start_datetime = *t;
  } else {
    rd.fail_or_warn("malformed_date", "start date/time '" + date + " " + time +
                                          "' is malformed; using 01.01.85");
    h.start_datetime = Timestamp::from_civil(1985, 1, 1);
  }

  if (auto v = rd.integer(header_bytes, "header_bytes")) {
    h.header_bytes = *v;
  } else {
    h.header_bytes = static_cast<std::int64_t>(expected);
  }
  if (h.header_bytes != static_cast<std::int64_t>(expected)) {
    rd.fail_or_warn("inconsistent_header_bytes",
                    "header_bytes is " + std::to_string(h.header_bytes) +
                        " but " + std::to_string(nsig) + " signals need " +
                        std::to_string(expected));
  }

  if (auto v = rd.integer(n_records, "n_records"); v && *v >= -1) {
    h.n_records = *v;
  } else {
    if (v) {
      rd.fail_or_warn("malformed_numeric_field",
                      "n_records: " + n_records + " is negative");
    }
    h.n_records = -1;
  }

  std::optional<double> dur = rd.decimal(duration, "record_duration");
  h.record_duration_sec = dur.value_or(1.0);

  h.signals.resize(nsig);
  const std::size_t base = kFixedHeaderBytes;
  const auto sig = [&](std::size_t column, std::size_t width, std::size_t i) {
    return at(base + column * nsig + i * width, width);
  };
  bool all_annotations = true;
  for (std::size_t i = 0; i < nsig; ++i) {
    EdfSignalHeader& s = h.signals[i];
    const std::string tag = "signal " + std::to_string(i) + " ";
    s.label = sig(0, 16, i);
    s.transducer = sig(16, 80, i);
    s.physical_dimension = sig(96, 8, i);
    const std::string pmin = sig(104, 8, i);
    const std::string pmax = sig(112, 8, i);
    const std::string dmin = sig(120, 8, i);
    const std::string dmax = sig(128, 8, i);
    s.prefiltering = sig(136, 80, i);
    const std::string spr = sig(216, 8, i);
    s.reserved = sig(224, 32, i);
    s.is_annotation_channel = s.label == kEdfAnnotationsLabel;
    all_annotations = all_annotations && s.is_annotation_channel;

    const auto digital = [&](const std::string& text, const char* name,
                             int fallback) {
      auto v = rd.integer(text, tag + name);
      if (!v) return fallback;
      if (*v < -32768 || *v > 32767) {
        rd.fail_or_warn("malformed_numeric_field",
                        tag + name + ": " + text + " outside int16 range");
        return static_cast<int>(std::clamp<std::int64_t>(*v, -32768, 32767));
      }
      return static_cast<int>(*v);
    };
    s.digital_min = digital(dmin, "digital_min", -32768);
    s.digital_max = digital(dmax, "digital_max", 32767);
    s.physical_min =
        rd.decimal(pmin, tag + "physical_min").value_or(s.digital_min);
    s.physical_max =
        rd.decimal(pmax, tag + "physical_max").value_or(s.digital_max);

    auto n = parse_integer(spr);
    if (!n || *n < 1 || *n > (1 << 24)) {
      throw Error("malformed_numeric_field",
                  tag + "samples_per_record: '" + spr +
                      "' is not a positive integer");
    }
    s.samples_per_record = static_cast<int>(*n);

    if (!s.is_annotation_channel && s.digital_min == s.digital_max) {
      rd.fail_or_warn("zero_digital_range",
                      tag + "'" + s.label + "' has digital_min == digital_max");
    }
  }

  if (dur && !(h.record_duration_sec > 0.0) &&
      !(all_annotations && h.record_duration_sec == 0.0)) {
    rd.fail_or_warn("malformed_numeric_field",
                    "record_duration: " + duration + " is not positive");
    h.record_duration_sec = 1.0;
  }
  return h;
}

double digital_to_physical(int d, const EdfSignalHeader& sh, ParseMode mode) {
  const double pmin = sh.physical_min;
  const double pmax = sh.physical_max;
  if (sh.digital_max == sh.digital_min) {
    if (mode == ParseMode::strict) {
      throw Error("zero_digital_range",
                  "'" + sh.label + "' has digital_min == digital_max");
    }
    return static_cast<double>(d) + pmin;
  }
  // pmin * (dmax - d) + pmax * (d - dmin), all over (dmax - dmin). The
  // integer differences are exact; the products and the sum carry their
  // rounding errors along and the quotient is corrected once.
  const double a = static_cast<double>(sh.digital_max) - d;
  const double b = static_cast<double>(d) - sh.digital_min;
  if (b == 0.0) return pmin;
  if (a == 0.0) return pmax;
  const double span =
      static_cast<double>(sh.digital_max) - static_cast<double>(sh.digital_min);
  const double p1 = pmin * a;
  const double e1 = std::fma(pmin, a, -p1);
  const double p2 = pmax * b;
  const double e2 = std::fma(pmax, b, -p2);
  const double s = p1 + p2;
  const double bv = s - p1;
  const double t = (p1 - (s - bv)) + (p2 - bv);
  const double q = s / span;
  const double r = std::fma(-q, span, s);
  const double out = q + (r + (t + (e1 + e2))) / span;
  if (std::isfinite(out)) return out;
  return (static_cast<double>(d) - sh.digital_min) * (pmax - pmin) / span +
         pmin;
}

// ---------------------------------------------------------------------------
// EdfFile
// ---------------------------------------------------------------------------

EdfFile::EdfFile(Bytes bytes, ParseMode mode)
    : bytes_(std::move(bytes)), mode_(mode) {
  header_ = parse_edf_header(bytes_, mode_, &warnings_);
  std::int64_t offset = 0;
  for (const auto& s : header_.signals) {
    signal_offsets_.push_back(offset);
    offset += std::int64_t{s.samples_per_record} * 2;
  }
  const std::int64_t data_start = static_cast<std::int64_t>(
      kFixedHeaderBytes + kSignalHeaderBytes * header_.signals.size());
  const std::int64_t available =
      static_cast<std::int64_t>(bytes_.size()) - data_start;
  const std::int64_t rb = header_.record_bytes();
  const std::int64_t complete = available / rb;
  const std::int64_t extra = available % rb;
  const bool strict = mode_ == ParseMode::strict;

  if (header_.n_records >= 0 && complete >= header_.n_records) {
    records_ = header_.n_records;
    const std::int64_t trailing = available - records_ * rb;
    if (trailing > 0) {
      warnings_.push_back(std::to_string(trailing) +
                          " bytes after the last declared record ignored");
    }
    return;
  }
  records_ = complete;
  if (header_.n_records >= 0) {
    const std::string msg = "file holds " + std::to_string(complete) + " of " +
                            std::to_string(header_.n_records) +
                            " declared records";
    if (strict) throw Error("truncated_record", msg);
    warnings_.push_back(msg + (extra > 0 ? "; trailing partial record dropped"
                                         : ""));
  } else if (extra > 0) {
    const std::string msg = "last data record is truncated (" +
                            std::to_string(extra) + " of " +
                            std::to_string(rb) + " bytes)";
    if (strict) throw Error("truncated_record", msg);
    warnings_.push_back(msg + "; dropped");
  }
}

EdfFile EdfFile::open(const fs::path& path, ParseMode mode) {
  return EdfFile(read_file(path), mode);
}

EdfFile EdfFile::from_bytes(Bytes bytes, ParseMode mode) {
  return EdfFile(std::move(bytes), mode);
}

Bytes EdfFile::read_signal_bytes(std::size_t index) const {
  if (index >= header_.signals.size()) {
    throw Error("out_of_range", "signal index " + std::to_string(index) +
                                    " outside [0, " +
                                    std::to_string(header_.signals.size()) +
                                    ")");
  }
  const std::size_t width =
      static_cast<std::size_t>(header_.signals[index].samples_per_record) * 2;
  const std::size_t rb = static_cast<std::size_t>(header_.record_bytes());
  const std::size_t start =
      kFixedHeaderBytes + kSignalHeaderBytes * header_.signals.size() +
      static_cast<std::size_t>(signal_offsets_[index]);
  Bytes out(width * static_cast<std::size_t>(records_));
  for (std::size_t r = 0; r < static_cast<std::size_t>(records_); ++r) {
    std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(start + r * rb),
                width, out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return out;
}

std::vector<std::int16_t> EdfFile::read_signal_digital(
    std::size_t index) const {
  const Bytes raw = read_signal_bytes(index);
  std::vector<std::int16_t> out(raw.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::int16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
  }
  return out;
}

PhysicalSignal EdfFile::read_signal_physical(std::size_t index) const {
  if (index < header_.signals.size() &&
      header_.signals[index].is_annotation_channel) {
    throw Error("out_of_range",
                "signal " + std::to_string(index) + " is an annotation channel");
  }
  const std::vector<std::int16_t> digital = read_signal_digital(index);
  const EdfSignalHeader& sh = header_.signals[index];
  PhysicalSignal out;
  out.sampling_rate = sh.samples_per_record / header_.record_duration_sec;
  out.values.resize(digital.size());
  if (digital.empty()) return out;

  // Long signals go through a table over the occurring digital range.
  const auto [lo, hi] = std::minmax_element(digital.begin(), digital.end());
  const std::size_t range = static_cast<std::size_t>(*hi - *lo) + 1;
  if (range < digital.size()) {
    std::vector<float> table(range);
    for (std::size_t k = 0; k < range; ++k) {
      table[k] = static_cast<float>(
          digital_to_physical(*lo + static_cast<int>(k), sh, mode_));
    }
    for (std::size_t i = 0; i < digital.size(); ++i) {
      out.values[i] = table[static_cast<std::size_t>(digital[i] - *lo)];
    }
  } else {
    for (std::size_t i = 0; i < digital.size(); ++i) {
      out.values[i] =
          static_cast<float>(digital_to_physical(digital[i], sh, mode_));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

std::vector<TalAnnotation> parse_tal_records(ByteView bytes, ParseMode mode,
                                             Warnings* warnings) {
  Warnings local;
  return TalParser(as_chars(bytes, 0, bytes.size()), mode,
                   warnings ? *warnings : local)
      .run();
}

AnnotationMapping AnnotationMapping::from_json(std::string_view text) {
  json::Json doc;
  try {
    doc = json::parse(text);
  } catch (const Error& e) {
    throw Error("invalid_mapping", e.what());
  }
  if (!doc.is_object()) {
    throw Error("invalid_mapping", "mapping must be a JSON object");
  }
  const auto check_pattern = [](const std::string& pattern) {
    try {
      std::regex re(pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error("invalid_mapping",
                  "bad pattern '" + pattern + "': " + e.what());
    }
  };

  AnnotationMapping m;
  for (const auto& [key, value] : doc.items()) {
    if (key == "stage_aliases") {
      if (!value.is_object()) {
        throw Error("invalid_mapping", "stage_aliases must be an object");
      }
      for (const auto& [pattern, stage] : value.items()) {
        check_pattern(pattern);
        std::optional<SleepStage> found;
        if (stage.is_string()) {
          for (SleepStage s : kAllSleepStages) {
            if (to_string(s) == stage.get<std::string>()) found = s;
          }
        }
        if (!found) {
          throw Error("invalid_mapping", "stage for '" + pattern +
                                             "' must be one of W, N1, N2, "
                                             "N3, R");
        }
        m.stage_aliases.push_back({pattern, *found});
      }
    } else if (key == "event_sets") {
      if (!value.is_array()) {
        throw Error("invalid_mapping", "event_sets must be an array");
      }
      for (const auto& rule : value) {
        if (!rule.is_object() || !rule.contains("pattern") ||
            !rule.contains("set_name") || !rule["pattern"].is_string() ||
            !rule["set_name"].is_string()) {
          throw Error("invalid_mapping",
                      "event_sets entries need string pattern and set_name");
        }
        EventSetRule r{rule["pattern"].get<std::string>(),
                       rule["set_name"].get<std::string>()};
        check_pattern(r.pattern);
        Issues issues;
        validate_entity_name(r.set_name, "event_sets", issues);
        if (has_errors(issues) || r.set_name == kHypnogramSet) {
          throw Error("invalid_mapping",
                      "'" + r.set_name + "' cannot be used as a set name");
        }
        m.event_sets.push_back(std::move(r));
      }
    } else {
      throw Error("invalid_mapping", "unknown key '" + key + "'");
    }
  }
  return m;
}

std::vector<AnnotationSet> map_annotations(
    const std::vector<TalAnnotation>& tals, const AnnotationMapping& mapping,
    Warnings* warnings) {
  Warnings local;
  Warnings& warn = warnings ? *warnings : local;
  constexpr auto kFlags = std::regex::ECMAScript | std::regex::icase;
  std::vector<std::pair<std::regex, SleepStage>> stage_rules;
  for (const auto& r : mapping.stage_aliases) {
    stage_rules.emplace_back(std::regex(r.pattern, kFlags), r.stage);
  }
  std::vector<std::pair<std::regex, std::string>> event_rules;
  for (const auto& r : mapping.event_sets) {
    event_rules.emplace_back(std::regex(r.pattern, kFlags), r.set_name);
  }

  std::vector<AnnotationSet> sets;
  const auto set_named = [&](std::string_view name,
                             std::string_view name_type) -> AnnotationSet& {
    for (auto& s : sets) {
      if (s.name == name) return s;
    }
    AnnotationSet s;
    s.name = std::string(name);
    s.name_type = std::string(name_type);
    return sets.emplace_back(std::move(s));
  };
  // Fixed output order: hypnogram, event sets, catch-all.
  set_named(kHypnogramSet, kAasmSleepStage);
  for (const auto& r : mapping.event_sets) set_named(r.set_name, kFreeText);
  set_named(kEdfAnnotationsSet, kFreeText);

  for (const auto& tal : tals) {
    if (tal.onset_sec < 0.0) {
      warn.push_back("annotation at negative onset " +
                     format_number(tal.onset_sec) + " s dropped");
      continue;
    }
    for (const auto& text : tal.texts) {
      Annotation a{text, tal.onset_sec, tal.duration_sec.value_or(0.0), {}};
      std::optional<SleepStage> stage;
      for (const auto& [re, s] : stage_rules) {
        if (std::regex_match(text, re)) {
          stage = s;
          break;
        }
      }
      if (!stage) {
        if (auto alias = match_sleep_stage(text)) {
          stage = alias->stage;
          if (alias->collapsed) {
            warn.push_back("'" + text + "' mapped to " +
                           std::string(to_string(alias->stage)));
          }
        }
      }
      if (stage) {
        a.name = std::string(to_string(*stage));
        set_named(kHypnogramSet, kAasmSleepStage)
            .annotations.push_back(std::move(a));
        continue;
      }
      std::string_view target = kEdfAnnotationsSet;
      for (const auto& [re, name] : event_rules) {
        if (std::regex_match(text, re)) {
          target = name;
          break;
        }
      }
      set_named(target, kFreeText).annotations.push_back(std::move(a));
    }
  }
  std::erase_if(sets, [](const AnnotationSet& s) {
    return s.annotations.empty();
  });
  return sets;
}

// ---------------------------------------------------------------------------
// Conversion
// ---------------------------------------------------------------------------

std::string sanitize_label(std::string_view label) {
  const std::string trimmed = [&] {
    const auto ws = [](char c) {
      return !std::isspace(static_cast<unsigned char>(c));
    };
    auto first = std::find_if(label.begin(), label.end(), ws);
    auto last = std::find_if(label.rbegin(), label.rend(), ws).base();
    return first < last ? std::string(first, last) : std::string();
  }();
  std::string out;
  for (char c : trimmed) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (out.empty() || out.back() != '_') {
      out.push_back('_');
    }
  }
  return out.empty() ? std::string("signal") : out;
}

void parse_edf_plus_patient(std::string_view patient_id,
                            const Timestamp& recording_start,
                            SubjectMetadata& metadata) {
  const auto parts = split_spaces(patient_id);
  if (parts.size() < 4) return;
  if (parts[1] == "M" || parts[1] == "F") metadata.sex = std::string(parts[1]);
  const auto birth = parse_edf_plus_date(parts[2]);
  if (!birth) return;
  const std::chrono::year_month_day rec{
      std::chrono::floor<std::chrono::days>(recording_start.time)};
  int years = int(rec.year()) - int(birth->year());
  if (rec.month() < birth->month() ||
      (rec.month() == birth->month() && rec.day() < birth->day())) {
    --years;
  }
  if (years >= 0 && years <= 150) metadata.age = years;
}

ConvertedSubject convert_edf_to_subject(const EdfFile& edf,
                                        const std::string& subject_id,
                                        const AnnotationMapping& mapping) {
  const EdfHeader& h = edf.header();
  if (h.is_discontinuous()) {
    throw Error("unsupported_discontinuous",
                "EDF+D (discontinuous) recordings are not supported");
  }
  ConvertedSubject out;
  out.warnings = edf.warnings();
  Subject& subject = out.subject;
  subject.metadata.subject_id = subject_id;
  subject.metadata.recording_start = h.start_datetime;
  if (h.is_edf_plus()) {
    parse_edf_plus_patient(h.patient_id, h.start_datetime, subject.metadata);
  }

  std::set<std::string> taken{std::string(kAnnotationsDir)};
  std::vector<TalAnnotation> tals;
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    const EdfSignalHeader& sh = h.signals[i];
    if (sh.is_annotation_channel) {
      const Bytes raw = edf.read_signal_bytes(i);
      auto part = parse_tal_records(raw, edf.mode(), &out.warnings);
      tals.insert(tals.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
      continue;
    }
    std::string name = sanitize_label(sh.label);
    if (taken.contains(name)) {
      if (edf.mode() == ParseMode::strict && name != kAnnotationsDir) {
        throw Error("duplicate_label", "labels sanitize to the same name '" +
                                           name + "'");
      }
      std::string candidate;
      for (int k = 2;; ++k) {
        candidate = name + "_" + std::to_string(k);
        if (!taken.contains(candidate)) break;
      }
      out.warnings.push_back("signal '" + sh.label + "' stored as '" +
                             candidate + "'");
      name = std::move(candidate);
    }
    taken.insert(name);
    PhysicalSignal sig = edf.read_signal_physical(i);
    std::optional<std::string> unit;
    if (!sh.physical_dimension.empty()) unit = sh.physical_dimension;
    subject.add_array(SampleArray::from_values(
        name, sig.sampling_rate, ArrayValues(std::move(sig.values)), unit));
  }
  for (auto& set : map_annotations(tals, mapping, &out.warnings)) {
    subject.add_annotation_set(std::move(set));
  }
  return out;
}

ConvertedSubject convert_edf_to_subject(const fs::path& edf_path,
                                        const std::string& subject_id,
                                        ParseMode mode,
                                        const AnnotationMapping& mapping) {
  return convert_edf_to_subject(EdfFile::open(edf_path, mode), subject_id,
                                mapping);
}

ConversionReport convert_directory(const fs::path& src_dir,
                                   const fs::path& dest_root,
                                   const ConvertOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  if (!fs::is_directory(src_dir, ec)) {
    throw Error("io_error", src_dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(src_dir, ec)) {
    std::string ext = entry.path().extension().string();
    for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".edf" && entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw Error("io_error", "cannot list " + src_dir.string());
  if (files.empty()) {
    throw Error("empty_source_directory",
                "no .edf files in " + src_dir.string());
  }
  std::sort(files.begin(), files.end());
  options.codec.validate();

  DatasetWriter writer(dest_root, options.dataset_name, options.codec,
                       options.overwrite);
  writer.add_series(options.series_name);

  struct Outcome {
    bool converted = false;
    Warnings warnings;
    std::optional<SkippedFile> skipped;
  };
  std::vector<Outcome> outcomes(files.size());
  detail::parallel_for(files.size(), options.workers, [&](std::size_t i) {
    try {
      ConvertedSubject c = convert_edf_to_subject(
          files[i], files[i].stem().string(), options.mode, options.mapping);
      writer.write_subject(options.series_name, c.subject);
      outcomes[i].converted = true;
      outcomes[i].warnings = std::move(c.warnings);
    } catch (const Error& e) {
      if (options.mode == ParseMode::strict || e.is_environmental()) throw;
      outcomes[i].skipped = SkippedFile{files[i], e.code(), e.what()};
    }
  });

  ConversionReport report;
  report.dataset_dir = writer.dataset_dir();
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string file = files[i].filename().string();
    if (outcomes[i].converted) ++report.converted;
    if (outcomes[i].skipped) report.skipped.push_back(*outcomes[i].skipped);
    for (const auto& w : outcomes[i].warnings) {
      report.warnings.push_back(file + ": " + w);
    }
  }
  report.written = writer.report();
  report.elapsed_sec = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return report;
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

std::string encode_tal(const TalAnnotation& tal) {
  std::string out = tal.onset_sec < 0.0 ? "-" : "+";
  out += format_fixed(std::fabs(tal.onset_sec));
  if (tal.duration_sec) {
    out += kTalDuration;
    out += format_fixed(*tal.duration_sec);
  }
  out += kTalSeparator;
  for (const auto& text : tal.texts) {
    out += text;
    out += kTalSeparator;
  }
  out += '\0';
  return out;
}

Bytes annotation_channel_bytes(
    const std::vector<std::vector<TalAnnotation>>& per_record,
    double record_duration_sec, int samples_per_record) {
  const std::size_t width = static_cast<std::size_t>(samples_per_record) * 2;
  Bytes out;
  for (std::size_t r = 0; r < per_record.size(); ++r) {
    std::string rec = "+" + format_fixed(double(r) * record_duration_sec);
    rec += kTalSeparator;
    rec += kTalSeparator;
    rec += '\0';
    for (const auto& tal : per_record[r]) rec += encode_tal(tal);
    if (rec.size() > width) {
      throw Error("field_overflow", "record " + std::to_string(r) +
                                        " annotations need " +
                                        std::to_string(rec.size()) +
                                        " bytes, channel holds " +
                                        std::to_string(width));
    }
    rec.resize(width, '\0');
    out.insert(out.end(), rec.begin(), rec.end());
  }
  return out;
}

Bytes digital_bytes(const std::vector<std::int16_t>& samples) {
  Bytes out(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(samples[i]);
    out[2 * i] = static_cast<std::uint8_t>(u & 0xFF);
    out[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
  }
  return out;
}

Bytes write_edf(const EdfHeader& h, const std::vector<Bytes>& signal_data) {
  if (signal_data.size() != h.signals.size()) {
    throw Error("invalid_argument", "one data buffer per signal required");
  }
  const std::chrono::sys_days day =
      std::chrono::floor<std::chrono::days>(h.start_datetime.time);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{
      std::chrono::floor<std::chrono::seconds>(h.start_datetime.time - day)};

  Bytes out;
  put_field(out, h.version, 8, "version");
  put_field(out, h.patient_id, 80, "patient_id");
  put_field(out, h.recording_id, 80, "recording_id");
  put_field(out,
            two_digits(unsigned(ymd.day())) + "." +
                two_digits(unsigned(ymd.month())) + "." +
                two_digits(unsigned(int(ymd.year()) % 100)),
            8, "start date");
  put_field(out,
            two_digits(unsigned(hms.hours().count())) + "." +
                two_digits(unsigned(hms.minutes().count())) + "." +
                two_digits(unsigned(hms.seconds().count())),
            8, "start time");
  put_field(out, std::to_string(h.header_bytes), 8, "header_bytes");
  put_field(out, h.reserved, 44, "reserved");
  put_field(out, std::to_string(h.n_records), 8, "n_records");
  put_field(out, format_number(h.record_duration_sec), 8, "record_duration");
  put_field(out, std::to_string(h.n_signals), 4, "n_signals");

  const auto column = [&](std::size_t width, std::string_view name,
                          auto&& value) {
    for (const auto& s : h.signals) put_field(out, value(s), width, name);
  };
  using S = EdfSignalHeader;
  column(16, "label", [](const S& s) { return s.label; });
  column(80, "transducer", [](const S& s) { return s.transducer; });
  column(8, "physical_dimension",
         [](const S& s) { return s.physical_dimension; });
  column(8, "physical_min",
         [](const S& s) { return format_number(s.physical_min); });
  column(8, "physical_max",
         [](const S& s) { return format_number(s.physical_max); });
  column(8, "digital_min",
         [](const S& s) { return std::to_string(s.digital_min); });
  column(8, "digital_max",
         [](const S& s) { return std::to_string(s.digital_max); });
  column(80, "prefiltering", [](const S& s) { return s.prefiltering; });
  column(8, "samples_per_record",
         [](const S& s) { return std::to_string(s.samples_per_record); });
  column(32, "reserved", [](const S& s) { return s.reserved; });

  std::int64_t records = h.n_records;
  if (records < 0 && !h.signals.empty()) {
    records = static_cast<std::int64_t>(signal_data[0].size()) /
              (std::int64_t{h.signals[0].samples_per_record} * 2);
  }
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    const std::size_t need = static_cast<std::size_t>(records) *
                             h.signals[i].samples_per_record * 2;
    if (signal_data[i].size() != need) {
      throw Error("invalid_argument",
                  "signal " + std::to_string(i) + " needs " +
                      std::to_string(need) + " bytes, got " +
                      std::to_string(signal_data[i].size()));
    }
  }
  for (std::int64_t r = 0; r < records; ++r) {
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
      const std::size_t width =
          static_cast<std::size_t>(h.signals[i].samples_per_record) * 2;
      const auto first = signal_data[i].begin() +
                         static_cast<std::ptrdiff_t>(std::size_t(r) * width);
      out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(width));
    }
  }
  return out;
}

}  // namespace slf
