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

// Binary encodings of one sample array.
//
// raw:          a single NPY v1.0 file ("data.npy"): 10-byte preamble, a
//               space-padded Python-literal header dict, little-endian payload.
// chunked_zstd: a Zarr v2 array directory ("data.zarr/"): a ".zarray" JSON
//               document plus chunk files "0", "1", ... each holding one
//               Zstandard frame of chunk_len little-endian samples. The last
//               chunk is zero-padded to chunk_len before compression.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slf/model.hpp"

namespace slf {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class CodecKind : std::uint8_t { raw, chunked_zstd };

std::string_view to_string(CodecKind kind);

inline constexpr int kMinZstdLevel = -7;
inline constexpr int kMaxZstdLevel = 22;
inline constexpr int kDefaultZstdLevel = 9;
inline constexpr std::int64_t kDefaultChunkBytes = std::int64_t{1} << 20;

struct ArrayCodecSpec {
  CodecKind kind = CodecKind::raw;
  int zstd_level = kDefaultZstdLevel;
  // Samples per chunk; defaults to max(1, 2^20 / item_size).
  std::optional<std::int64_t> chunk_len;

  static ArrayCodecSpec raw() { return {}; }
  static ArrayCodecSpec chunked(int level = kDefaultZstdLevel,
                                std::optional<std::int64_t> chunk_len = {}) {
    return {CodecKind::chunked_zstd, level, chunk_len};
  }

  // Throws Error("invalid_codec") when the level is outside [-7, 22] or the
  // chunk length is < 1.
  void validate() const;
  std::int64_t chunk_len_for(ValueType type) const;
  // "-" for raw, "zstd-<level>" otherwise.
  std::string label() const;
};

// Converts values to `type`, requiring every element to be exactly
// representable (NaN may only travel between float types). Throws
// Error("unrepresentable_value").
ArrayValues convert_exact(const ArrayValues& values, ValueType type);

// Little-endian bytes of the samples.
Bytes to_le_bytes(const ArrayValues& values);
ArrayValues from_le_bytes(ByteView bytes, ValueType type, std::size_t count);

// ---------------------------------------------------------------------------
// NPY
// ---------------------------------------------------------------------------

// "<f4", "<f8", "<i2" or "<i4".
std::string_view numpy_descr(ValueType type);
std::optional<ValueType> parse_numpy_descr(std::string_view descr);

struct NpyHeader {
  ValueType value_type = ValueType::float32;
  std::int64_t n_samples = 0;
  // Offset of the first payload byte (preamble length).
  std::size_t data_offset = 0;
};

bool has_npy_magic(ByteView bytes);
std::string make_npy_preamble(ValueType type, std::int64_t n_samples);

// Parses the preamble; `bytes` may stop anywhere after it. Throws
// Error("bad_magic"), Error("unsupported_dtype"), Error("unsupported_shape")
// or Error("truncated_header").
NpyHeader parse_npy_header(ByteView bytes);

Bytes encode_raw_array(const ArrayValues& values, ValueType type);
// Throws as parse_npy_header, plus Error("truncated_payload").
ArrayValues decode_raw_array(ByteView bytes);

// ---------------------------------------------------------------------------
// Zstandard and Zarr v2
// ---------------------------------------------------------------------------

Bytes zstd_compress(ByteView input, int level);
// Requires exactly one frame whose content size equals `expected_size`.
// Throws Error("corrupt_chunk").
Bytes zstd_decompress(ByteView frame, std::size_t expected_size);

struct ZarrArrayMeta {
  std::int64_t shape = 0;
  std::int64_t chunk_len = 1;
  ValueType value_type = ValueType::float32;
  // nullopt when chunks are stored uncompressed (compressor: null).
  std::optional<int> zstd_level;
  double fill_value = 0.0;

  std::int64_t n_chunks() const {
    return shape == 0 ? 0 : (shape + chunk_len - 1) / chunk_len;
  }
};

// The exact one-line .zarray text followed by a newline.
std::string make_zarray(const ZarrArrayMeta& meta);
// Accepts any JSON layout; throws Error("bad_json"), Error("schema_error"),
// Error("unsupported_dtype"), Error("unsupported_shape") or
// Error("invalid_codec").
ZarrArrayMeta parse_zarray(std::string_view text);

struct ChunkedArray {
  std::string zarray;
  std::vector<Bytes> chunks;
};

ChunkedArray encode_chunked_array(const ArrayValues& values, ValueType type,
                                  std::int64_t chunk_len, int zstd_level);

// Decodes one stored chunk to its full chunk_len samples (padding included).
ArrayValues decode_chunk(ByteView stored, const ZarrArrayMeta& meta);

}  // namespace slf
