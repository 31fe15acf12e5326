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

"""Writes the EDF/EDF+ fixtures in tests/golden/edf/ byte by byte, together
with expected.json holding every header field, the digital samples, the
physical values (exact rational calibration rounded once to float64) and the
decoded TALs. Independent of the C++ reader and writer."""

import json
import pathlib
from fractions import Fraction

OUT = pathlib.Path(__file__).resolve().parent.parent / "golden" / "edf"


def field(value, width):
    text = str(value).encode("latin-1")
    assert len(text) <= width, (value, width)
    return text + b" " * (width - len(text))


def edf_bytes(hdr, signals, records):
    """records[r][i] is a bytes object for signal i of record r."""
    ns = len(signals)
    out = bytearray()
    out += field(hdr.get("version", "0"), 8)
    out += field(hdr["patient_id"], 80)
    out += field(hdr["recording_id"], 80)
    out += field(hdr["date"], 8)
    out += field(hdr["time"], 8)
    out += field(hdr.get("header_bytes", 256 + 256 * ns), 8)
    out += field(hdr.get("reserved", ""), 44)
    out += field(hdr["n_records"], 8)
    out += field(hdr["duration"], 8)
    out += field(ns, 4)
    for key, width in (("label", 16), ("transducer", 80), ("dimension", 8),
                       ("pmin", 8), ("pmax", 8), ("dmin", 8), ("dmax", 8),
                       ("prefiltering", 80), ("spr", 8), ("reserved", 32)):
        for s in signals:
            out += field(s.get(key, ""), width)
    for rec in records:
        for chunk in rec:
            out += chunk
    return bytes(out)


def int16_le(values):
    out = bytearray()
    for v in values:
        out += (v & 0xFFFF).to_bytes(2, "little")
    return bytes(out)


def physical(d, s):
    pmin, pmax = Fraction(s["pmin"]), Fraction(s["pmax"])
    dmin, dmax = s["dmin"], s["dmax"]
    return float((d - dmin) * (pmax - pmin) / (dmax - dmin) + pmin)


def pad(text, width):
    raw = text.encode("utf-8")
    assert len(raw) <= width
    return raw + b"\0" * (width - len(raw))


def signal_expectation(s, digital, duration):
    return {
        "label": s["label"],
        "transducer": s.get("transducer", ""),
        "physical_dimension": s.get("dimension", ""),
        "physical_min": float(Fraction(s["pmin"])),
        "physical_max": float(Fraction(s["pmax"])),
        "digital_min": s["dmin"],
        "digital_max": s["dmax"],
        "prefiltering": s.get("prefiltering", ""),
        "samples_per_record": s["spr"],
        "reserved": s.get("reserved", ""),
        "digital": digital,
        "physical": [physical(d, s) for d in digital],
        "sampling_rate": s["spr"] / duration,
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    expected = {}

    # Two ordinary signals, two 1 s records.
    eeg = {"label": "EEG Fpz-Cz", "transducer": "AgAgCl electrode",
           "dimension": "uV", "pmin": "-250", "pmax": "250", "dmin": -2048,
           "dmax": 2047, "prefiltering": "HP:0.1Hz LP:75Hz", "spr": 4}
    resp = {"label": "Resp oro-nasal", "pmin": "-1000", "pmax": "1000",
            "dmin": -32768, "dmax": 32767, "spr": 2}
    eeg_d = [0, 1023, -1024, 2047, -2048, 5, 6, 7]
    resp_d = [100, -100, 32767, -32768]
    hdr = {"patient_id": "X X X X", "recording_id": "Startdate X X X X",
           "date": "02.01.99", "time": "23.15.00", "n_records": 2,
           "duration": 1}
    records = [[int16_le(eeg_d[r * 4:(r + 1) * 4]),
                int16_le(resp_d[r * 2:(r + 1) * 2])] for r in range(2)]
    (OUT / "two_signal.edf").write_bytes(edf_bytes(hdr, [eeg, resp], records))
    expected["two_signal.edf"] = {
        "version": "0", "patient_id": hdr["patient_id"],
        "recording_id": hdr["recording_id"], "start": "1999-01-02T23:15:00",
        "header_bytes": 768, "reserved": "", "n_records": 2,
        "record_duration_sec": 1.0, "n_signals": 2,
        "signals": [signal_expectation(eeg, eeg_d, 1.0),
                    signal_expectation(resp, resp_d, 1.0)],
        "tals": [],
    }

    # EDF+C with an annotation channel, three 2 s records.
    eeg2 = {"label": "EEG C4-A1", "dimension": "uV", "pmin": "-500.5",
            "pmax": "499.25", "dmin": -32768, "dmax": 32767, "spr": 8}
    ann = {"label": "EDF Annotations", "pmin": "-1", "pmax": "1",
           "dmin": -32768, "dmax": 32767, "spr": 30}
    eeg2_d = [(r * 8 + k) * 1000 - 12000 for r in range(3) for k in range(8)]
    tal_text = [
        "+0\x14\x14\x00" "+0\x1530\x14Sleep stage W\x14\x00",
        "+2\x14\x14\x00" "+1.5\x150.5\x14Lights off\x14\x00",
        "+4\x14\x14\x00" "+4\x14Sleep stage 4\x14Apnea\x14\x00",
    ]
    hdr2 = {"patient_id": "MCH-0234567 F 02-MAY-1951 Haagse_Harry",
            "recording_id": "Startdate 02-MAR-2002 PSG-1234/2002 NN Telemetry03",
            "date": "02.03.02", "time": "22.30.05", "n_records": 3,
            "duration": 2, "reserved": "EDF+C"}
    records2 = [[int16_le(eeg2_d[r * 8:(r + 1) * 8]), pad(tal_text[r], 60)]
                for r in range(3)]
    (OUT / "edf_plus.edf").write_bytes(edf_bytes(hdr2, [eeg2, ann], records2))
    expected["edf_plus.edf"] = {
        "version": "0", "patient_id": hdr2["patient_id"],
        "recording_id": hdr2["recording_id"], "start": "2002-03-02T22:30:05",
        "header_bytes": 768, "reserved": "EDF+C", "n_records": 3,
        "record_duration_sec": 2.0, "n_signals": 2,
        "signals": [signal_expectation(eeg2, eeg2_d, 2.0)],
        "tals": [
            {"onset": 0.0, "duration": 30.0, "texts": ["Sleep stage W"]},
            {"onset": 1.5, "duration": 0.5, "texts": ["Lights off"]},
            {"onset": 4.0, "duration": None,
             "texts": ["Sleep stage 4", "Apnea"]},
        ],
        "sex": "F", "age": 50,
    }

    # Discontinuous EDF+.
    hdr3 = dict(hdr2, reserved="EDF+D")
    (OUT / "discontinuous.edf").write_bytes(edf_bytes(hdr3, [eeg2, ann],
                                                      records2))

    # Unknown record count, start in 2010.
    one = {"label": "ECG", "dimension": "mV", "pmin": "-5", "pmax": "5",
           "dmin": -2048, "dmax": 2047, "spr": 3}
    one_d = [1, 2, 3, -1, -2, -3, 2047, -2048, 0]
    hdr4 = {"patient_id": "X", "recording_id": "X", "date": "02.01.10",
            "time": "00.00.00", "n_records": "-1", "duration": "0.5"}
    records4 = [[int16_le(one_d[r * 3:(r + 1) * 3])] for r in range(3)]
    (OUT / "unknown_count.edf").write_bytes(edf_bytes(hdr4, [one], records4))
    expected["unknown_count.edf"] = {
        "version": "0", "patient_id": "X", "recording_id": "X",
        "start": "2010-01-02T00:00:00", "header_bytes": 512, "reserved": "",
        "n_records": -1, "record_duration_sec": 0.5, "n_signals": 1,
        "signals": [signal_expectation(one, one_d, 0.5)], "tals": [],
    }

    # Three declared records, two and a half present.
    data = edf_bytes(dict(hdr4, n_records=3), [one], records4)
    (OUT / "truncated.edf").write_bytes(data[:-3])

    (OUT / "expected.json").write_text(json.dumps(expected, indent=2) + "\n")


if __name__ == "__main__":
    main()
