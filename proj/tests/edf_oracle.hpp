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

// Independent references for EDF calibration and TAL parsing.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "slf/edf.hpp"

namespace testutil {

using Rational = boost::multiprecision::cpp_rational;

// Exact value of a finite double.
inline Rational exact(double x) {
  int exp = 0;
  const double m = std::frexp(x, &exp);
  const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  Rational r(mant);
  exp -= 53;
  const Rational p = Rational(boost::multiprecision::cpp_int(1) << std::abs(exp));
  return exp >= 0 ? Rational(r * p) : Rational(r / p);
}

// True when |got - truth| is at most one ulp of `got`.
inline bool within_one_ulp(double got, const Rational& truth) {
  const double up = std::nextafter(got, std::numeric_limits<double>::infinity());
  const double down = std::nextafter(got, -std::numeric_limits<double>::infinity());
  const Rational err = abs(exact(got) - truth);
  return err <= exact(up) - exact(got) || err <= exact(got) - exact(down);
}

// Exact (d - dmin) * (pmax - pmin) / (dmax - dmin) + pmin.
inline Rational exact_physical(int d, const slf::EdfSignalHeader& s) {
  return Rational(d - s.digital_min) * (exact(s.physical_max) - exact(s.physical_min)) /
             Rational(s.digital_max - s.digital_min) +
         exact(s.physical_min);
}

// Character-level reading of a TAL stream: cut at NULs, then at 0x14, then
// the first field at 0x15.
inline std::vector<slf::TalAnnotation> split_tals(const std::string& stream) {
  std::vector<slf::TalAnnotation> out;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    const std::size_t nul = stream.find('\0', pos);
    const std::string tal = stream.substr(pos, nul - pos);
    pos = nul == std::string::npos ? stream.size() : nul + 1;
    if (tal.empty()) continue;
    std::vector<std::string> fields;
    std::size_t f = 0;
    while (true) {
      const std::size_t sep = tal.find('\x14', f);
      if (sep == std::string::npos) break;
      fields.push_back(tal.substr(f, sep - f));
      f = sep + 1;
    }
    slf::TalAnnotation a;
    const std::string& head = fields.at(0);
    const std::size_t dur = head.find('\x15');
    a.onset_sec = std::stod(head.substr(0, dur));
    if (dur != std::string::npos) a.duration_sec = std::stod(head.substr(dur + 1));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!fields[i].empty()) a.texts.push_back(fields[i]);
    }
    if (!a.texts.empty()) out.push_back(a);
  }
  return out;
}

inline std::string random_number(std::mt19937_64& rng) {
  std::string s = std::to_string(rng() % 100000);
  if (rng() % 2) s += "." + std::to_string(rng() % 1000);
  return s;
}

inline std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"a", "Z", " ", "9", "-", "é", "ß", "€",
                                                  "睡", "Sleep stage ", "Apnea", "+", "."};
  std::string s;
  const int n = static_cast<int>(rng() % 6);
  for (int i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

inline std::string random_tal_stream(std::mt19937_64& rng) {
  std::string s;
  const int n = static_cast<int>(rng() % 8);
  for (int i = 0; i < n; ++i) {
    s += (rng() % 4 == 0) ? "-" : "+";
    s += random_number(rng);
    if (rng() % 2) s += "\x15" + random_number(rng);
    s += '\x14';
    const int texts = static_cast<int>(rng() % 4);
    for (int t = 0; t < texts; ++t) s += random_text(rng) + '\x14';
    if (texts == 0) s += '\x14';
    s += '\0';
    s.append(rng() % 3, '\0');
  }
  return s;
}

}  // namespace testutil
