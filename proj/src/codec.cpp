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

#include "slf/codec.hpp"

#include <zstd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <type_traits>

#include <json.hpp>

namespace slf {

static_assert(std::endian::native == std::endian::little,
              "sample payloads are memcpy'd as little-endian");

std::string_view to_string(CodecKind kind) {
  return kind == CodecKind::raw ? "raw" : "chunked_zstd";
}

void ArrayCodecSpec::validate() const {
  if (kind != CodecKind::chunked_zstd) return;
  if (zstd_level < kMinZstdLevel || zstd_level > kMaxZstdLevel) {
    throw Error("invalid_codec", "zstd level " + std::to_string(zstd_level) +
                                     " outside [-7, 22]");
  }
  if (chunk_len && *chunk_len < 1) {
    throw Error("invalid_codec", "chunk_len must be >= 1");
  }
}

std::int64_t ArrayCodecSpec::chunk_len_for(ValueType type) const {
  if (chunk_len) return *chunk_len;
  return std::max<std::int64_t>(
      1, kDefaultChunkBytes / static_cast<std::int64_t>(item_size(type)));
}

std::string ArrayCodecSpec::label() const {
  if (kind == CodecKind::raw) return "-";
  return "zstd-" + std::to_string(zstd_level);
}

// ---------------------------------------------------------------------------
// Element conversion
// ---------------------------------------------------------------------------

namespace {

template <typename To, typename From>
bool exact_convert(From in, To& out) {
  if constexpr (std::is_floating_point_v<From> && std::is_floating_point_v<To>) {
    out = static_cast<To>(in);
    return std::isnan(in) || static_cast<From>(out) == in;
  } else if constexpr (std::is_floating_point_v<From>) {
    if (!std::isfinite(in) ||
        in < static_cast<From>(std::numeric_limits<To>::min()) ||
        in > static_cast<From>(std::numeric_limits<To>::max())) {
      return false;
    }
    out = static_cast<To>(in);
    return static_cast<From>(out) == in;
  } else {
    out = static_cast<To>(in);
    return static_cast<From>(out) == in;
  }
}

template <typename To>
std::vector<To> convert_vector(const ArrayValues& values) {
  return std::visit(
      [](const auto& v) {
        std::vector<To> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!exact_convert(v[i], out[i])) {
            throw Error("unrepresentable_value",
                        "sample " + std::to_string(i) +
                            " is not representable in the target type");
          }
        }
        return out;
      },
      values);
}

}  // namespace

ArrayValues convert_exact(const ArrayValues& values, ValueType type) {
  if (value_type_of(values) == type) return values;
  switch (type) {
    case ValueType::float32: return convert_vector<float>(values);
    case ValueType::float64: return convert_vector<double>(values);
    case ValueType::int16: return convert_vector<std::int16_t>(values);
    case ValueType::int32: return convert_vector<std::int32_t>(values);
  }
  throw Error("invalid_value_type", "unknown value type");
}

Bytes to_le_bytes(const ArrayValues& values) {
  return std::visit(
      [](const auto& v) {
        Bytes out(v.size() * sizeof(typename std::decay_t<decltype(v)>::value_type));
        if (!out.empty()) std::memcpy(out.data(), v.data(), out.size());
        return out;
      },
      values);
}

ArrayValues from_le_bytes(ByteView bytes, ValueType type, std::size_t count) {
  ArrayValues out = make_empty_values(type, count);
  std::visit(
      [&](auto& v) {
        const std::size_t n = count * sizeof(typename std::decay_t<decltype(v)>::value_type);
        if (bytes.size() < n) {
          throw Error("truncated_payload", "expected " + std::to_string(n) +
                                               " payload bytes, found " +
                                               std::to_string(bytes.size()));
        }
        if (n) std::memcpy(v.data(), bytes.data(), n);
      },
      out);
  return out;
}

// ---------------------------------------------------------------------------
// NPY
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint8_t kNpyMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kNpyAlign = 64;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

// Value text that follows `'key':` in the header dict, up to the next
// top-level comma or closing brace.
std::optional<std::string_view> dict_value(std::string_view dict,
                                           std::string_view key) {
  const std::string quoted = "'" + std::string(key) + "'";
  std::size_t pos = dict.find(quoted);
  if (pos == std::string_view::npos) {
    const std::string dq = "\"" + std::string(key) + "\"";
    pos = dict.find(dq);
    if (pos == std::string_view::npos) return std::nullopt;
  }
  pos = dict.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) return std::nullopt;
  ++pos;
  int depth = 0;
  std::size_t end = pos;
  for (; end < dict.size(); ++end) {
    const char c = dict[end];
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if ((c == ',' || c == '}') && depth == 0) break;
  }
  return trim(dict.substr(pos, end - pos));
}

}  // namespace

std::string_view numpy_descr(ValueType type) {
  switch (type) {
    case ValueType::float32: return "<f4";
    case ValueType::float64: return "<f8";
    case ValueType::int16: return "<i2";
    case ValueType::int32: return "<i4";
  }
  return "";
}

std::optional<ValueType> parse_numpy_descr(std::string_view descr) {
  if (descr == "<f4") return ValueType::float32;
  if (descr == "<f8") return ValueType::float64;
  if (descr == "<i2") return ValueType::int16;
  if (descr == "<i4") return ValueType::int32;
  return std::nullopt;
}

bool has_npy_magic(ByteView bytes) {
  return bytes.size() >= sizeof(kNpyMagic) &&
         std::memcmp(bytes.data(), kNpyMagic, sizeof(kNpyMagic)) == 0;
}

std::string make_npy_preamble(ValueType type, std::int64_t n_samples) {
  std::string dict = "{'descr': '" + std::string(numpy_descr(type)) +
                     "', 'fortran_order': False, 'shape': (" +
                     std::to_string(n_samples) + ",), }";
  const std::size_t unpadded = sizeof(kNpyMagic) + 2 + 2 + dict.size() + 1;
  const std::size_t total = (unpadded + kNpyAlign - 1) / kNpyAlign * kNpyAlign;
  dict.append(total - unpadded, ' ');
  dict.push_back('\n');
  const std::size_t header_len = dict.size();

  std::string out(reinterpret_cast<const char*>(kNpyMagic), sizeof(kNpyMagic));
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header_len & 0xff));
  out.push_back(static_cast<char>((header_len >> 8) & 0xff));
  out += dict;
  return out;
}

NpyHeader parse_npy_header(ByteView bytes) {
  if (bytes.size() < 8 ||
      std::memcmp(bytes.data(), kNpyMagic, sizeof(kNpyMagic)) != 0) {
    throw Error("bad_magic", "missing NPY magic bytes");
  }
  const std::uint8_t major = bytes[6];
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (major == 1) {
    if (bytes.size() < 10) throw Error("truncated_header", "NPY preamble cut short");
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8);
    prefix = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw Error("truncated_header", "NPY preamble cut short");
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8) |
                 (std::size_t{bytes[10]} << 16) | (std::size_t{bytes[11]} << 24);
    prefix = 12;
  } else {
    throw Error("bad_magic", "unsupported NPY version " + std::to_string(major));
  }
  if (bytes.size() < prefix + header_len) {
    throw Error("truncated_header", "NPY header cut short");
  }
  const std::string_view dict(reinterpret_cast<const char*>(bytes.data() + prefix),
                              header_len);

  const auto descr = dict_value(dict, "descr");
  const auto fortran = dict_value(dict, "fortran_order");
  const auto shape = dict_value(dict, "shape");
  if (!descr || !fortran || !shape) {
    throw Error("bad_magic", "NPY header lacks descr/fortran_order/shape");
  }
  std::string_view d = *descr;
  if (d.size() >= 2 && (d.front() == '\'' || d.front() == '"')) {
    d = d.substr(1, d.size() - 2);
  }
  const auto type = parse_numpy_descr(d);
  if (!type) {
    throw Error("unsupported_dtype", "unsupported NPY dtype " + std::string(d));
  }

  std::string_view s = *shape;
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') {
    throw Error("unsupported_shape", "malformed NPY shape " + std::string(s));
  }
  s = trim(s.substr(1, s.size() - 2));
  if (!s.empty() && s.back() == ',') s = trim(s.substr(0, s.size() - 1));
  if (s.empty() || s.find(',') != std::string_view::npos) {
    throw Error("unsupported_shape",
                "only 1-D arrays are supported, got shape " +
                    std::string(*shape));
  }
  std::int64_t n = 0;
  for (char c : s) {
    if (c < '0' || c > '9') {
      throw Error("unsupported_shape", "malformed NPY shape " + std::string(*shape));
    }
    n = n * 10 + (c - '0');
  }
  return NpyHeader{*type, n, prefix + header_len};
}

Bytes encode_raw_array(const ArrayValues& values, ValueType type) {
  const ArrayValues converted = convert_exact(values, type);
  const std::string preamble =
      make_npy_preamble(type, static_cast<std::int64_t>(size_of(converted)));
  const Bytes payload = to_le_bytes(converted);
  Bytes out;
  out.reserve(preamble.size() + payload.size());
  out.insert(out.end(), preamble.begin(), preamble.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

ArrayValues decode_raw_array(ByteView bytes) {
  const NpyHeader header = parse_npy_header(bytes);
  const std::size_t need =
      static_cast<std::size_t>(header.n_samples) * item_size(header.value_type);
  const ByteView payload = bytes.subspan(header.data_offset);
  if (payload.size() < need) {
    throw Error("truncated_payload",
                "NPY shape declares " + std::to_string(header.n_samples) +
                    " samples (" + std::to_string(need) + " bytes) but only " +
                    std::to_string(payload.size()) + " payload bytes exist");
  }
  return from_le_bytes(payload, header.value_type,
                       static_cast<std::size_t>(header.n_samples));
}

// ---------------------------------------------------------------------------
// Zstandard
// ---------------------------------------------------------------------------

Bytes zstd_compress(ByteView input, int level) {
  Bytes out(ZSTD_compressBound(input.size()));
  const std::size_t n =
      ZSTD_compress(out.data(), out.size(), input.data(), input.size(), level);
  if (ZSTD_isError(n)) {
    throw Error("compression_failed", ZSTD_getErrorName(n));
  }
  out.resize(n);
  return out;
}

Bytes zstd_decompress(ByteView frame, std::size_t expected_size) {
  const std::size_t frame_size =
      ZSTD_findFrameCompressedSize(frame.data(), frame.size());
  if (ZSTD_isError(frame_size) || frame_size != frame.size()) {
    throw Error("corrupt_chunk", "chunk is not exactly one Zstandard frame");
  }
  const unsigned long long content =
      ZSTD_getFrameContentSize(frame.data(), frame.size());
  if (content != ZSTD_CONTENTSIZE_UNKNOWN && content != expected_size) {
    throw Error("corrupt_chunk", "chunk decompresses to " +
                                     std::to_string(content) + " bytes, expected " +
                                     std::to_string(expected_size));
  }
  Bytes out(expected_size);
  const std::size_t n =
      ZSTD_decompress(out.data(), out.size(), frame.data(), frame.size());
  if (ZSTD_isError(n)) {
    throw Error("corrupt_chunk", std::string("zstd: ") + ZSTD_getErrorName(n));
  }
  if (n != expected_size) {
    throw Error("corrupt_chunk", "chunk decompressed to " + std::to_string(n) +
                                     " bytes, expected " +
                                     std::to_string(expected_size));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zarr v2
// ---------------------------------------------------------------------------

std::string make_zarray(const ZarrArrayMeta& meta) {
  std::string compressor = "null";
  if (meta.zstd_level) {
    compressor = "{\"id\": \"zstd\", \"level\": " +
                 std::to_string(*meta.zstd_level) + "}";
  }
  return "{\"zarr_format\": 2, \"shape\": [" + std::to_string(meta.shape) +
         "], \"chunks\": [" + std::to_string(meta.chunk_len) +
         "], \"dtype\": \"" + std::string(numpy_descr(meta.value_type)) +
         "\", \"compressor\": " + compressor +
         ", \"fill_value\": 0, \"order\": \"C\", \"filters\": null}\n";
}

ZarrArrayMeta parse_zarray(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("bad_json", std::string(".zarray is not valid JSON: ") + e.what());
  }
  const auto schema = [](const std::string& what) -> ZarrArrayMeta {
    throw Error("schema_error", ".zarray: " + what);
  };
  if (!doc.is_object()) return schema("not a JSON object");
  if (doc.value("zarr_format", 0) != 2) return schema("zarr_format must be 2");

  ZarrArrayMeta meta;
  const auto& shape = doc["shape"];
  const auto& chunks = doc["chunks"];
  if (!shape.is_array() || !chunks.is_array()) {
    return schema("shape and chunks must be arrays");
  }
  if (shape.size() != 1 || chunks.size() != 1) {
    throw Error("unsupported_shape", ".zarray: only 1-D arrays are supported");
  }
  if (!shape[0].is_number_integer() || !chunks[0].is_number_integer() ||
      shape[0].get<std::int64_t>() < 0 || chunks[0].get<std::int64_t>() < 1) {
    return schema("shape/chunks entries must be non-negative integers");
  }
  meta.shape = shape[0].get<std::int64_t>();
  meta.chunk_len = chunks[0].get<std::int64_t>();

  if (!doc["dtype"].is_string()) return schema("dtype must be a string");
  const auto type = parse_numpy_descr(doc["dtype"].get<std::string>());
  if (!type) {
    throw Error("unsupported_dtype",
                ".zarray: unsupported dtype " + doc["dtype"].get<std::string>());
  }
  meta.value_type = *type;

  const auto& comp = doc["compressor"];
  if (!comp.is_null()) {
    if (!comp.is_object() || comp.value("id", "") != "zstd") {
      throw Error("invalid_codec", ".zarray: only the zstd compressor is supported");
    }
    const int level = comp.value("level", kDefaultZstdLevel);
    if (level < kMinZstdLevel || level > kMaxZstdLevel) {
      throw Error("invalid_codec", ".zarray: zstd level " + std::to_string(level) +
                                       " outside [-7, 22]");
    }
    meta.zstd_level = level;
  }
  if (doc.contains("order") && doc["order"] != "C") {
    return schema("order must be \"C\"");
  }
  if (doc.contains("filters") && !doc["filters"].is_null() &&
      !(doc["filters"].is_array() && doc["filters"].empty())) {
    throw Error("invalid_codec", ".zarray: filters are not supported");
  }
  const auto& fill = doc["fill_value"];
  if (fill.is_number()) {
    meta.fill_value = fill.get<double>();
  } else if (!fill.is_null()) {
    return schema("fill_value must be a number or null");
  }
  return meta;
}

ChunkedArray encode_chunked_array(const ArrayValues& values, ValueType type,
                                  std::int64_t chunk_len, int zstd_level) {
  ArrayCodecSpec::chunked(zstd_level, chunk_len).validate();
  const ArrayValues converted = convert_exact(values, type);
  const Bytes payload = to_le_bytes(converted);

  ZarrArrayMeta meta;
  meta.shape = static_cast<std::int64_t>(size_of(converted));
  meta.chunk_len = chunk_len;
  meta.value_type = type;
  meta.zstd_level = zstd_level;

  ChunkedArray out;
  out.zarray = make_zarray(meta);
  const std::size_t chunk_bytes =
      static_cast<std::size_t>(chunk_len) * item_size(type);
  Bytes scratch(chunk_bytes);
  for (std::int64_t i = 0; i < meta.n_chunks(); ++i) {
    const std::size_t begin = static_cast<std::size_t>(i) * chunk_bytes;
    const std::size_t len = std::min(chunk_bytes, payload.size() - begin);
    ByteView chunk(payload.data() + begin, len);
    if (len < chunk_bytes) {
      // Fill value 0 is all-zero bytes for every supported type.
      std::fill(scratch.begin(), scratch.end(), 0);
      std::memcpy(scratch.data(), payload.data() + begin, len);
      chunk = ByteView(scratch);
    }
    out.chunks.push_back(zstd_compress(chunk, zstd_level));
  }
  return out;
}

ArrayValues decode_chunk(ByteView stored, const ZarrArrayMeta& meta) {
  const std::size_t n = static_cast<std::size_t>(meta.chunk_len);
  const std::size_t bytes = n * item_size(meta.value_type);
  if (!meta.zstd_level) {
    if (stored.size() != bytes) {
      throw Error("corrupt_chunk", "uncompressed chunk has " +
                                       std::to_string(stored.size()) +
                                       " bytes, expected " + std::to_string(bytes));
    }
    return from_le_bytes(stored, meta.value_type, n);
  }
  const Bytes raw = zstd_decompress(stored, bytes);
  return from_le_bytes(raw, meta.value_type, n);
}

}  // namespace slf
