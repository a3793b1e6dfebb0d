"""Spike event files, time/frequency binning and batching.

The on-disk format ("SPKE") is a little-endian binary container:

    magic "SPKE", u16 version=1, u32 C_raw, u32 N_c, u32 n_samples
    per sample: u32 label, u64 duration_us, u32 n_events,
                then n_events x (u64 time_us, u32 channel)

Events within a sample are stored sorted non-decreasing by time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"SPKE"
VERSION = 1

_HEADER = struct.Struct("<4sHIII")
_SAMPLE_HEAD = struct.Struct("<IQI")


class SpikeFileError(ValueError):
    """Malformed event file; message carries the byte offset."""


@dataclass
class SampleRecord:
    label: int
    times_us: np.ndarray  # uint64, sorted non-decreasing
    channels: np.ndarray  # uint32
    duration_us: int

    def __post_init__(self):
        self.times_us = np.asarray(self.times_us, dtype=np.uint64)
        self.channels = np.asarray(self.channels, dtype=np.uint32)

    @property
    def n_events(self) -> int:
        return len(self.times_us)

    def __eq__(self, other):
        return (
            isinstance(other, SampleRecord)
            and self.label == other.label
            and self.duration_us == other.duration_us
            and np.array_equal(self.times_us, other.times_us)
            and np.array_equal(self.channels, other.channels)
        )


@dataclass
class DatasetSplit:
    name: str
    c_raw: int
    n_classes: int
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return (
            isinstance(other, DatasetSplit)
            and self.c_raw == other.c_raw
            and self.n_classes == other.n_classes
            and len(self.records) == len(other.records)
            and all(a == b for a, b in zip(self.records, other.records))
        )


def write_event_file(split: DatasetSplit, path) -> None:
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, split.c_raw, split.n_classes, len(split.records)))
        for rec in split.records:
            f.write(_SAMPLE_HEAD.pack(rec.label, rec.duration_us, rec.n_events))
            if rec.n_events:
                buf = np.empty(rec.n_events, dtype=[("t", "<u8"), ("c", "<u4")])
                buf["t"] = rec.times_us
                buf["c"] = rec.channels
                f.write(buf.tobytes())


def read_event_file(path, name: str = "data") -> DatasetSplit:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise SpikeFileError(f"truncated header at byte 0 (file has {len(raw)} bytes)")
    magic, version, c_raw, n_classes, n_samples = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise SpikeFileError(f"bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise SpikeFileError(f"unsupported version {version} at byte 4")
    off = _HEADER.size
    records = []
    for i in range(n_samples):
        if off + _SAMPLE_HEAD.size > len(raw):
            raise SpikeFileError(f"truncated sample header at byte {off}")
        label, duration_us, n_events = _SAMPLE_HEAD.unpack_from(raw, off)
        if label >= n_classes:
            raise SpikeFileError(f"label {label} >= N_c {n_classes} at byte {off}")
        off += _SAMPLE_HEAD.size
        nbytes = n_events * 12
        if off + nbytes > len(raw):
            raise SpikeFileError(f"truncated event block at byte {off}")
        buf = np.frombuffer(raw, dtype=[("t", "<u8"), ("c", "<u4")], count=n_events, offset=off)
        times = buf["t"].copy()
        chans = buf["c"].copy()
        if n_events:
            if chans.max() >= c_raw:
                bad = int(np.argmax(chans >= c_raw))
                raise SpikeFileError(f"channel out of range at byte {off + 12 * bad + 8}")
            if np.any(np.diff(times.astype(np.int64)) < 0):
                bad = int(np.argmax(np.diff(times.astype(np.int64)) < 0)) + 1
                raise SpikeFileError(f"non-monotone event time at byte {off + 12 * bad}")
            if times.max() > duration_us:
                raise SpikeFileError(f"event time exceeds duration at byte {off}")
        off += nbytes
        records.append(SampleRecord(label, times, chans, duration_us))
    return DatasetSplit(name, c_raw, n_classes, records)


def bin_sample(sample: SampleRecord, time_steps: int, c_raw: int,
               bin_factor: int = 1, binarize: bool = False) -> np.ndarray:
    """Bin one sample into a dense (T, C_raw/bin_factor) spike tensor slice.

    An event at (time_us, ch) lands in time bin floor(time_us * T / duration)
    clamped to T-1 (boundary events at t == duration are kept, not dropped)
    and channel bin floor(ch / bin_factor).
    """
    if time_steps < 1:
        raise ValueError("time_steps must be >= 1")
    if c_raw % bin_factor != 0:
        raise ValueError(f"bin_factor {bin_factor} does not divide C_raw {c_raw}")
    n_ch = c_raw // bin_factor
    out = np.zeros((time_steps, n_ch), dtype=np.float64)
    if sample.n_events:
        t_idx = (sample.times_us.astype(np.float64) * time_steps / sample.duration_us).astype(np.int64)
        np.clip(t_idx, 0, time_steps - 1, out=t_idx)
        c_idx = sample.channels.astype(np.int64) // bin_factor
        np.add.at(out, (t_idx, c_idx), 1.0)
    if binarize:
        np.clip(out, 0.0, 1.0, out=out)
    return out


# Synthetic interval-discrimination task. Each sample carries a reference
# burst and an echo burst lag_a (class 0) or lag_b (class 1) steps later over
# the same random channel band, so total counts and channel marginals carry
# no class information; only the temporal interval does.
BURST_WIDTH = 2
BURST_CHANNELS = 4
_STEP_US = 1000


def make_interval_task(n_samples: int, time_steps: int, n_channels: int,
                       lag_a: int, lag_b: int, seed: int = 0) -> DatasetSplit:
    if not (0 < lag_a < lag_b < time_steps):
        raise ValueError(f"need 0 < lag_a < lag_b < T, got {lag_a}, {lag_b}, {time_steps}")
    if lag_b + BURST_WIDTH > time_steps:
        raise ValueError("lag_b burst does not fit in the sequence")
    if n_channels < BURST_CHANNELS:
        raise ValueError(f"need at least {BURST_CHANNELS} channels")
    rng = np.random.default_rng(seed)
    duration = time_steps * _STEP_US
    max_onset = time_steps - lag_b - BURST_WIDTH  # same range for both classes
    records = []
    for i in range(n_samples):
        label = int(rng.integers(0, 2))
        lag = lag_a if label == 0 else lag_b
        onset = int(rng.integers(0, max_onset + 1))
        ch0 = int(rng.integers(0, n_channels - BURST_CHANNELS + 1))
        steps = []
        for start in (onset, onset + lag):
            for dt in range(BURST_WIDTH):
                for dc in range(BURST_CHANNELS):
                    steps.append((start + dt, ch0 + dc))
        steps.sort()
        times = np.array([s * _STEP_US for s, _ in steps], dtype=np.uint64)
        chans = np.array([c for _, c in steps], dtype=np.uint32)
        records.append(SampleRecord(label, times, chans, duration))
    return DatasetSplit("interval", n_channels, 2, records)


def batch_iter(split: DatasetSplit, batch_size: int, time_steps: int,
               bin_factor: int = 1, binarize: bool = False,
               shuffle: bool = False, seed: int = 0):
    """Yield (spikes (B,T,C), labels (B,)) batches covering every sample once."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = np.arange(len(split.records))
    if shuffle:
        np.random.default_rng(seed).shuffle(order)
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        x = np.stack([
            bin_sample(split.records[i], time_steps, split.c_raw, bin_factor, binarize)
            for i in idx
        ])
        labels = np.array([split.records[i].label for i in idx], dtype=np.int64)
        yield x, labels
