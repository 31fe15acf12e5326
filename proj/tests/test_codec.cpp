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
#include <cstring>
#include <limits>
#include <random>
#include <string>

#include "slf/codec.hpp"
#include "system_zstd.hpp"
#include "test_util.hpp"

using namespace slf;
using testutil::golden;
using testutil::read_bytes;
using testutil::read_text;

namespace {

// NPY v1.0 preamble for an arbitrary header dict, built from the format
// description: magic, version, u16 length, dict padded with spaces to a
// multiple of 64 and terminated by '\n'.
Bytes npy_preamble(const std::string& dict) {
  std::string header = dict;
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';
  Bytes out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0,
               static_cast<std::uint8_t>(header.size() & 0xff),
               static_cast<std::uint8_t>(header.size() >> 8)};
  out.insert(out.end(), header.begin(), header.end());
  return out;
}

template <typename T>
void expect_error(const char* code, T&& fn) {
  try {
    fn();
    FAIL_CHECK("expected " << std::string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

std::vector<float> half_steps(int n) {
  std::vector<float> v(n);
  for (int i = 0; i < n; ++i) v[i] = 0.5f * static_cast<float>(i);
  return v;
}

}  // namespace

TEST_CASE("raw encoding matches golden NPY files") {
  CHECK(encode_raw_array(std::vector<float>{}, ValueType::float32) ==
        read_bytes(golden("empty_f4.npy")));
  CHECK(encode_raw_array(std::vector<float>{0.0f}, ValueType::float32) ==
        read_bytes(golden("zero_f4.npy")));
  CHECK(encode_raw_array(std::vector<std::int16_t>{1, -1}, ValueType::int16) ==
        read_bytes(golden("pair_i2.npy")));
  CHECK(encode_raw_array(std::vector<double>{3.5, -2.25, 1e300, -0.0, 5e-324},
                         ValueType::float64) == read_bytes(golden("mixed_f8.npy")));
  std::vector<std::int32_t> ramp_i4;
  for (int i = -5; i < 300; ++i) ramp_i4.push_back(i);
  CHECK(encode_raw_array(ramp_i4, ValueType::int32) ==
        read_bytes(golden("ramp_i4.npy")));
  std::vector<float> ramp_f4;
  for (int i = 0; i < 1000; ++i) ramp_f4.push_back(static_cast<float>((i - 500) / 8.0));
  CHECK(encode_raw_array(ramp_f4, ValueType::float32) ==
        read_bytes(golden("ramp_f4.npy")));
}

TEST_CASE("NPY preamble matches golden for a long shape") {
  const std::string pre = make_npy_preamble(ValueType::float32, 12345678901LL);
  const Bytes g = read_bytes(golden("header_f4_12345678901.bin"));
  CHECK(Bytes(pre.begin(), pre.end()) == g);
  CHECK(pre.size() % 64 == 0);
}

TEST_CASE("small raw examples byte by byte") {
  const Bytes zero = encode_raw_array(std::vector<float>{0.0f}, ValueType::float32);
  REQUIRE(zero.size() == 132);
  CHECK(zero[127] == '\n');
  CHECK(Bytes(zero.begin() + 128, zero.end()) == Bytes{0, 0, 0, 0});

  const Bytes pair = encode_raw_array(std::vector<std::int16_t>{1, -1}, ValueType::int16);
  REQUIRE(pair.size() == 132);
  CHECK(Bytes(pair.begin() + 128, pair.end()) == Bytes{0x01, 0x00, 0xff, 0xff});

  const Bytes empty = encode_raw_array(std::vector<float>{}, ValueType::float32);
  CHECK(empty.size() == 128);
  const std::string text(empty.begin() + 10, empty.end());
  CHECK(text.find("'shape': (0,)") != std::string::npos);
}

TEST_CASE("raw decoding") {
  const Bytes b = encode_raw_array(std::vector<float>{3.5f, -2.25f}, ValueType::float32);
  const ArrayValues v = decode_raw_array(b);
  CHECK(value_type_of(v) == ValueType::float32);
  CHECK(std::get<std::vector<float>>(v) == std::vector<float>{3.5f, -2.25f});

  Bytes truncated = npy_preamble("{'descr': '<f4', 'fortran_order': False, 'shape': (8,), }");
  truncated.insert(truncated.end(), 4, 0);
  expect_error("truncated_payload", [&] { decode_raw_array(truncated); });

  Bytes square = npy_preamble("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }");
  square.insert(square.end(), 16, 0);
  expect_error("unsupported_shape", [&] { decode_raw_array(square); });

  Bytes fortran = npy_preamble("{'descr': '<f4', 'fortran_order': True, 'shape': (2,), }");
  fortran.insert(fortran.end(), 8, 0);
  // One-dimensional data has the same layout in either order.
  CHECK(size_of(decode_raw_array(fortran)) == 2);

  for (const char* descr : {"<u2", ">f4", "<f2", "|b1", "<i8"}) {
    CAPTURE(descr);
    Bytes odd = npy_preamble(std::string("{'descr': '") + descr +
                             "', 'fortran_order': False, 'shape': (1,), }");
    odd.insert(odd.end(), 8, 0);
    expect_error("unsupported_dtype", [&] { decode_raw_array(odd); });
  }

  Bytes bad = b;
  bad[1] = 'X';
  expect_error("bad_magic", [&] { decode_raw_array(bad); });
  expect_error("truncated_header", [&] { decode_raw_array(Bytes(b.begin(), b.begin() + 40)); });
}

TEST_CASE("raw decoding accepts header variants numpy also writes") {
  // Key order and spacing differ from what the encoder emits.
  Bytes b = npy_preamble("{'shape': (3,), 'fortran_order': False, 'descr': '<i2'}");
  for (std::uint8_t x : {1, 0, 2, 0, 3, 0}) b.push_back(x);
  const ArrayValues v = decode_raw_array(b);
  CHECK(std::get<std::vector<std::int16_t>>(v) == std::vector<std::int16_t>{1, 2, 3});
}

TEST_CASE("raw round trip over random values of every type") {
  std::mt19937_64 rng(5);
  for (ValueType t : testutil::kAllTypes) {
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
      const ArrayValues v = testutil::random_values(rng, t, n);
      const Bytes b = encode_raw_array(v, t);
      CHECK(b.size() == 128 + n * item_size(t));
      CHECK(bit_equal(decode_raw_array(b), v));
    }
  }
}

TEST_CASE("encoding into another type requires exact values") {
  const Bytes b = encode_raw_array(std::vector<double>{1.0, -7.0}, ValueType::int16);
  CHECK(std::get<std::vector<std::int16_t>>(decode_raw_array(b)) ==
        std::vector<std::int16_t>{1, -7});
  expect_error("unrepresentable_value", [] {
    encode_raw_array(std::vector<float>{std::nanf("")}, ValueType::int16);
  });
  expect_error("unrepresentable_value", [] {
    encode_raw_array(std::vector<double>{0.5}, ValueType::int32);
  });
  expect_error("unrepresentable_value", [] {
    encode_raw_array(std::vector<std::int32_t>{40000}, ValueType::int16);
  });
}

TEST_CASE(".zarray matches golden text") {
  ZarrArrayMeta meta;
  meta.shape = 10;
  meta.chunk_len = 4;
  meta.value_type = ValueType::float32;
  meta.zstd_level = 9;
  CHECK(make_zarray(meta) == read_text(golden("zarray_f4_n10_c4_l9.json")));

  const ChunkedArray enc = encode_chunked_array(half_steps(10), ValueType::float32, 4, 9);
  CHECK(enc.zarray == read_text(golden("zarray_f4_n10_c4_l9.json")));
}

TEST_CASE(".zarray parsing") {
  const std::string pretty = R"({
    "chunks": [4], "compressor": {"id": "zstd", "level": 9},
    "dtype": "<i2", "fill_value": 0, "filters": null,
    "order": "C", "shape": [10], "zarr_format": 2
  })";
  const ZarrArrayMeta m = parse_zarray(pretty);
  CHECK(m.shape == 10);
  CHECK(m.chunk_len == 4);
  CHECK(m.value_type == ValueType::int16);
  CHECK(m.zstd_level == 9);
  CHECK(m.n_chunks() == 3);
  expect_error("bad_json", [] { parse_zarray("{not json"); });
  expect_error("unsupported_shape", [] {
    parse_zarray(R"({"zarr_format": 2, "shape": [2, 2], "chunks": [2, 2], "dtype": "<f4",
                    "compressor": null, "fill_value": 0, "order": "C", "filters": null})");
  });
  expect_error("invalid_codec", [] {
    parse_zarray(R"({"zarr_format": 2, "shape": [2], "chunks": [2], "dtype": "<f4",
                    "compressor": {"id": "blosc"}, "fill_value": 0, "order": "C", "filters": null})");
  });
}

TEST_CASE("chunks decode with the system libzstd to the golden bytes") {
  testutil::SystemZstd sys;
  REQUIRE_MESSAGE(sys.available(), "system libzstd not found");
  const Bytes expected = read_bytes(golden("chunks_f4_n10_c4.bin"));
  REQUIRE(expected.size() == 48);
  const ChunkedArray enc = encode_chunked_array(half_steps(10), ValueType::float32, 4, 9);
  REQUIRE(enc.chunks.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto decoded = sys.decompress_single_frame(enc.chunks[i]);
    REQUIRE(decoded.has_value());
    CHECK(*decoded == Bytes(expected.begin() + 16 * i, expected.begin() + 16 * (i + 1)));
  }
  // The padding of the last chunk is two float32 zeros.
  const auto last = *sys.decompress_single_frame(enc.chunks[2]);
  CHECK(Bytes(last.begin() + 8, last.end()) == Bytes(8, 0));
}

TEST_CASE("chunk count and single chunk") {
  CHECK(encode_chunked_array(half_steps(10), ValueType::float32, 10, 9).chunks.size() == 1);
  CHECK(encode_chunked_array(half_steps(10), ValueType::float32, 1000, 9).chunks.size() == 1);
  CHECK(encode_chunked_array(half_steps(0), ValueType::float32, 4, 9).chunks.empty());
  for (int n = 1; n <= 40; ++n) {
    for (int c = 1; c <= 9; ++c) {
      CHECK(encode_chunked_array(half_steps(n), ValueType::float32, c, 1).chunks.size() ==
            static_cast<std::size_t>((n + c - 1) / c));
    }
  }
}

TEST_CASE("system libzstd agrees with the linked decoder on random data") {
  testutil::SystemZstd sys;
  REQUIRE(sys.available());
  std::mt19937_64 rng(9);
  for (ValueType t : testutil::kAllTypes) {
    for (int level : {-7, 1, 9, 22}) {
      const std::size_t n = 1 + rng() % 3000;
      const std::int64_t c = 1 + static_cast<std::int64_t>(rng() % 700);
      const ArrayValues v = testutil::random_values(rng, t, n);
      const ChunkedArray enc = encode_chunked_array(v, t, c, level);
      const ZarrArrayMeta meta = parse_zarray(enc.zarray);
      Bytes joined;
      for (const Bytes& chunk : enc.chunks) {
        const auto sys_out = sys.decompress_single_frame(chunk);
        REQUIRE(sys_out.has_value());
        CHECK(*sys_out == to_le_bytes(decode_chunk(chunk, meta)));
        joined.insert(joined.end(), sys_out->begin(), sys_out->end());
      }
      const Bytes raw = to_le_bytes(v);
      REQUIRE(joined.size() >= raw.size());
      CHECK(std::equal(raw.begin(), raw.end(), joined.begin()));
      CHECK(std::all_of(joined.begin() + raw.size(), joined.end(),
                        [](std::uint8_t b) { return b == 0; }));
    }
  }
}

TEST_CASE("levels 9 and 22 decode identically and 22 is not larger") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 64.0);
  std::vector<float> v(200000);
  for (auto& x : v) x = static_cast<float>(std::round(noise(rng)) * (500.0 / 65535.0));
  const ChunkedArray a = encode_chunked_array(v, ValueType::float32, 65536, 9);
  const ChunkedArray b = encode_chunked_array(v, ValueType::float32, 65536, 22);
  std::size_t size9 = 0, size22 = 0;
  const ZarrArrayMeta ma = parse_zarray(a.zarray), mb = parse_zarray(b.zarray);
  for (std::size_t i = 0; i < a.chunks.size(); ++i) {
    size9 += a.chunks[i].size();
    size22 += b.chunks[i].size();
    CHECK(bit_equal(decode_chunk(a.chunks[i], ma), decode_chunk(b.chunks[i], mb)));
  }
  CHECK(static_cast<double>(size22) <= static_cast<double>(size9) * 1.02);
}

TEST_CASE("corrupt frames are rejected") {
  const ChunkedArray enc = encode_chunked_array(half_steps(10), ValueType::float32, 4, 9);
  const ZarrArrayMeta meta = parse_zarray(enc.zarray);
  Bytes cut(enc.chunks[0].begin(), enc.chunks[0].end() - 2);
  expect_error("corrupt_chunk", [&] { decode_chunk(cut, meta); });
  Bytes two = enc.chunks[0];
  two.insert(two.end(), enc.chunks[1].begin(), enc.chunks[1].end());
  expect_error("corrupt_chunk", [&] { decode_chunk(two, meta); });
  expect_error("corrupt_chunk", [&] { zstd_decompress(enc.chunks[0], 8); });
  expect_error("corrupt_chunk", [&] { decode_chunk(Bytes{1, 2, 3}, meta); });
}

TEST_CASE("codec spec limits and defaults") {
  CHECK_NOTHROW(ArrayCodecSpec::chunked(-7).validate());
  CHECK_NOTHROW(ArrayCodecSpec::chunked(22).validate());
  expect_error("invalid_codec", [] { ArrayCodecSpec::chunked(23).validate(); });
  expect_error("invalid_codec", [] { ArrayCodecSpec::chunked(-8).validate(); });
  expect_error("invalid_codec", [] { ArrayCodecSpec::chunked(9, 0).validate(); });
  const ArrayCodecSpec spec = ArrayCodecSpec::chunked();
  CHECK(spec.zstd_level == 9);
  CHECK(spec.chunk_len_for(ValueType::float32) == 262144);
  CHECK(spec.chunk_len_for(ValueType::float64) == 131072);
  CHECK(spec.chunk_len_for(ValueType::int16) == 524288);
  CHECK(ArrayCodecSpec::chunked(9, 17).chunk_len_for(ValueType::int16) == 17);
  CHECK(spec.label() == "zstd-9");
  CHECK(ArrayCodecSpec::raw().label() == "-");
}

TEST_CASE("descr strings") {
  CHECK(numpy_descr(ValueType::float32) == "<f4");
  CHECK(numpy_descr(ValueType::float64) == "<f8");
  CHECK(numpy_descr(ValueType::int16) == "<i2");
  CHECK(numpy_descr(ValueType::int32) == "<i4");
  for (ValueType t : testutil::kAllTypes) CHECK(parse_numpy_descr(numpy_descr(t)) == t);
  CHECK_FALSE(parse_numpy_descr("<u4").has_value());
}
