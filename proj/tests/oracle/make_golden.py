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

"""Regenerates the golden fixtures in tests/golden/ with NumPy and the json
module, independently of the C++ encoders. The outputs are committed; run this
only when a fixture is added."""

import io
import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "golden"


def save_npy(name, array):
    buf = io.BytesIO()
    np.save(buf, array, allow_pickle=False)
    (OUT / name).write_bytes(buf.getvalue())


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    save_npy("empty_f4.npy", np.array([], dtype="<f4"))
    save_npy("zero_f4.npy", np.array([0.0], dtype="<f4"))
    save_npy("pair_i2.npy", np.array([1, -1], dtype="<i2"))
    save_npy("mixed_f8.npy", np.array([3.5, -2.25, 1e300, -0.0, 5e-324], dtype="<f8"))
    save_npy("ramp_i4.npy", np.arange(-5, 300, dtype="<i4"))
    save_npy("ramp_f4.npy", ((np.arange(1000) - 500) / 8.0).astype("<f4"))

    # Preamble only, for a shape whose digits push the header length around.
    buf = io.BytesIO()
    np.lib.format.write_array_header_1_0(
        buf, {"descr": "<f4", "fortran_order": False, "shape": (12345678901,)})
    (OUT / "header_f4_12345678901.bin").write_bytes(buf.getvalue())

    zarray = {
        "zarr_format": 2,
        "shape": [10],
        "chunks": [4],
        "dtype": "<f4",
        "compressor": {"id": "zstd", "level": 9},
        "fill_value": 0,
        "order": "C",
        "filters": None,
    }
    (OUT / "zarray_f4_n10_c4_l9.json").write_text(json.dumps(zarray) + "\n")

    # Decompressed contents expected for chunks "0", "1", "2" of
    # [0.0, 0.5, ..., 4.5] with chunk_len 4: the last chunk zero-padded.
    values = (np.arange(10) * 0.5).astype("<f4")
    padded = np.concatenate([values, np.zeros(2, dtype="<f4")])
    (OUT / "chunks_f4_n10_c4.bin").write_bytes(padded.tobytes())


if __name__ == "__main__":
    main()
