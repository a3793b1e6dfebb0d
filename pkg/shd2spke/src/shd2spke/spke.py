"""Minimal reader/writer for the SPKE event-file format (version 1).

Little-endian layout:

    magic "SPKE", u16 version=1, u32 C_raw, u32 N_c, u32 n_samples
    per sample: u32 label, u64 duration_us, u32 n_events,
                then n_events x (u64 time_us, u32 channel)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SPKE"
VERSION = 1

_HEADER = struct.Struct("<4sHIII")
_SAMPLE_HEAD = struct.Struct("<IQI")


class SpkeError(ValueError):
    pass


@dataclass
class Sample:
    label: int
    times_us: np.ndarray  # uint64, sorted non-decreasing
    channels: np.ndarray  # uint32
    duration_us: int

    def __eq__(self, other):
        return (isinstance(other, Sample)
                and self.label == other.label
                and self.duration_us == other.duration_us
                and np.array_equal(self.times_us, other.times_us)
                and np.array_equal(self.channels, other.channels))


@dataclass
class SpkeFile:
    c_raw: int
    n_classes: int
    samples: list


def write(path, data: SpkeFile) -> None:
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, data.c_raw, data.n_classes,
                             len(data.samples)))
        for s in data.samples:
            n = len(s.times_us)
            f.write(_SAMPLE_HEAD.pack(s.label, s.duration_us, n))
            if n:
                buf = np.empty(n, dtype=[("t", "<u8"), ("c", "<u4")])
                buf["t"] = s.times_us
                buf["c"] = s.channels
                f.write(buf.tobytes())


def read(path) -> SpkeFile:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise SpkeError("truncated header")
    magic, version, c_raw, n_classes, n_samples = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise SpkeError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SpkeError(f"unsupported version {version}")
    off = _HEADER.size
    samples = []
    for _ in range(n_samples):
        if off + _SAMPLE_HEAD.size > len(raw):
            raise SpkeError(f"truncated sample header at byte {off}")
        label, duration_us, n_events = _SAMPLE_HEAD.unpack_from(raw, off)
        off += _SAMPLE_HEAD.size
        nbytes = 12 * n_events
        if off + nbytes > len(raw):
            raise SpkeError(f"truncated event block at byte {off}")
        buf = np.frombuffer(raw, dtype=[("t", "<u8"), ("c", "<u4")],
                            count=n_events, offset=off)
        off += nbytes
        samples.append(Sample(label, buf["t"].copy(), buf["c"].copy(),
                              duration_us))
    return SpkeFile(c_raw, n_classes, samples)
