#!/usr/bin/env python3
# Copyright 2026 The SLF Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Compression ratios of the synthetic signal profiles, measured with NumPy
data and the system libzstd (1 MiB chunks, as the chunked store writes them).
Used once to pick the quantization sigma and the frozen ratio thresholds."""

import ctypes
import ctypes.util
import sys

import numpy as np

GAIN = 500.0 / 65535.0
CHUNK_BYTES = 1 << 20


def load_zstd():
    lib = ctypes.CDLL(ctypes.util.find_library("zstd") or "libzstd.so.1")
    lib.ZSTD_compressBound.restype = ctypes.c_size_t
    lib.ZSTD_compressBound.argtypes = [ctypes.c_size_t]
    lib.ZSTD_compress.restype = ctypes.c_size_t
    lib.ZSTD_compress.argtypes = [ctypes.c_void_p, ctypes.c_size_t,
                                  ctypes.c_void_p, ctypes.c_size_t, ctypes.c_int]
    lib.ZSTD_isError.restype = ctypes.c_uint
    lib.ZSTD_isError.argtypes = [ctypes.c_size_t]
    return lib


def compressed_size(lib, data, level):
    total = 0
    for start in range(0, len(data), CHUNK_BYTES):
        chunk = data[start:start + CHUNK_BYTES]
        if len(chunk) < CHUNK_BYTES:
            chunk = chunk + bytes(CHUNK_BYTES - len(chunk))
        bound = lib.ZSTD_compressBound(len(chunk))
        dst = ctypes.create_string_buffer(bound)
        n = lib.ZSTD_compress(dst, bound, chunk, len(chunk), level)
        assert not lib.ZSTD_isError(n)
        total += n
    return total


def main():
    lib = load_zstd()
    rng = np.random.default_rng(12345)
    n = 256 * 8192  # one channel of 8192 s at 256 Hz, 8 MiB as float32
    noise = rng.standard_normal(n)
    print("profile sigma level ratio")
    for sigma in (4, 8, 16, 32, 64, 128, 512):
        d = np.clip(np.round(noise * sigma), -32768, 32767)
        data = (d * GAIN).astype("<f4").tobytes()
        for level in (9, 22) if sigma == 8 else (9,):
            r = compressed_size(lib, data, level) / len(data)
            print(f"int16_quantized {sigma} {level} {r:.4f}")
    data = noise.astype("<f4").tobytes()
    r = compressed_size(lib, data, 9) / len(data)
    print(f"gaussian_noise - 9 {r:.4f}")
    sys.stdout.flush()


if __name__ == "__main__":
    main()
