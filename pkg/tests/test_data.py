import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaysnn.data import (BURST_CHANNELS, BURST_WIDTH, DatasetSplit,
                           SampleRecord, SpikeFileError, batch_iter,
                           bin_sample, make_interval_task, read_event_file,
                           write_event_file)


def _sample(label=0, times=(10, 20, 20, 900), chans=(0, 3, 1, 2), dur=1000):
    return SampleRecord(label, np.array(times, dtype=np.uint64),
                        np.array(chans, dtype=np.uint32), dur)


def test_round_trip(tmp_path):
    split = DatasetSplit("x", c_raw=4, n_classes=2,
                         records=[_sample(0), _sample(1, (), (), 500)])
    p = tmp_path / "f.spke"
    write_event_file(split, p)
    back = read_event_file(p, name="x")
    assert back == split


@given(st.lists(st.tuples(st.integers(0, 2),
                          st.lists(st.tuples(st.integers(0, 10**6),
                                             st.integers(0, 6)), max_size=20)),
                max_size=5))
@settings(max_examples=30, deadline=None)
def test_round_trip_property(tmp_path_factory, samples):
    records = []
    for label, events in samples:
        events = sorted(events)
        t = np.array([e[0] for e in events], dtype=np.uint64)
        c = np.array([e[1] for e in events], dtype=np.uint32)
        records.append(SampleRecord(label, t, c, 10**6))
    split = DatasetSplit("p", c_raw=7, n_classes=3, records=records)
    p = tmp_path_factory.mktemp("spke") / "f.spke"
    write_event_file(split, p)
    assert read_event_file(p) == split


def test_read_errors_carry_byte_offsets(tmp_path):
    p = tmp_path / "f.spke"
    p.write_bytes(b"NOPE" + bytes(14))
    with pytest.raises(SpikeFileError, match="magic.*byte 0"):
        read_event_file(p)
    p.write_bytes(b"SPKE" + struct.pack("<H", 9) + bytes(12))
    with pytest.raises(SpikeFileError, match="version 9"):
        read_event_file(p)
    p.write_bytes(b"SP")
    with pytest.raises(SpikeFileError, match="truncated header"):
        read_event_file(p)
    # valid header claiming one sample, but no sample bytes
    p.write_bytes(struct.pack("<4sHIII", b"SPKE", 1, 4, 2, 1))
    with pytest.raises(SpikeFileError, match="truncated sample header at byte 18"):
        read_event_file(p)


def _write_raw(tmp_path, label, events, n_classes=2, c_raw=4, duration=1000):
    p = tmp_path / "raw.spke"
    body = struct.pack("<4sHIII", b"SPKE", 1, c_raw, n_classes, 1)
    body += struct.pack("<IQI", label, duration, len(events))
    for t, c in events:
        body += struct.pack("<QI", t, c)
    p.write_bytes(body)
    return p


def test_read_validates_contents(tmp_path):
    with pytest.raises(SpikeFileError, match="label 5"):
        read_event_file(_write_raw(tmp_path, 5, []))
    with pytest.raises(SpikeFileError, match="channel out of range"):
        read_event_file(_write_raw(tmp_path, 0, [(1, 9)]))
    with pytest.raises(SpikeFileError, match="non-monotone"):
        read_event_file(_write_raw(tmp_path, 0, [(50, 0), (10, 0)]))
    with pytest.raises(SpikeFileError, match="exceeds duration"):
        read_event_file(_write_raw(tmp_path, 0, [(5000, 0)]))


def test_bin_sample_boundaries_and_channels():
    s = _sample(0, times=(0, 999, 1000), chans=(0, 3, 2), dur=1000)
    x = bin_sample(s, time_steps=10, c_raw=4)
    assert x.shape == (10, 4)
    assert x[0, 0] == 1.0
    assert x[9, 3] == 1.0
    assert x[9, 2] == 1.0  # boundary event at t == duration clamps to T-1
    assert x.sum() == 3.0


def test_bin_sample_frequency_binning_and_binarize():
    s = _sample(0, times=(0, 0, 0), chans=(0, 1, 3), dur=1000)
    x = bin_sample(s, time_steps=2, c_raw=4, bin_factor=2)
    assert x.shape == (2, 2)
    assert x[0, 0] == 2.0 and x[0, 1] == 1.0
    xb = bin_sample(s, time_steps=2, c_raw=4, bin_factor=2, binarize=True)
    assert xb[0, 0] == 1.0
    with pytest.raises(ValueError):
        bin_sample(s, time_steps=2, c_raw=4, bin_factor=3)
    with pytest.raises(ValueError):
        bin_sample(s, time_steps=0, c_raw=4)


def test_interval_task_class_structure():
    split = make_interval_task(200, 50, 16, 3, 12, seed=4)
    assert split.n_classes == 2 and split.c_raw == 16
    counts = {0: [], 1: []}
    for rec in split.records:
        counts[rec.label].append(rec.n_events)
    # both classes present and spike counts carry no label information
    assert counts[0] and counts[1]
    assert len(set(counts[0]) | set(counts[1])) == 1
    assert counts[0][0] == 2 * BURST_WIDTH * BURST_CHANNELS
    # echo lag separates the classes
    for rec in split.records[:20]:
        steps = np.unique(rec.times_us // 1000)
        lag = int(steps[BURST_WIDTH] - steps[0])
        assert lag == (3 if rec.label == 0 else 12)


def test_interval_task_validation():
    with pytest.raises(ValueError):
        make_interval_task(4, 50, 16, 12, 3)
    with pytest.raises(ValueError):
        make_interval_task(4, 10, 16, 3, 9)
    with pytest.raises(ValueError):
        make_interval_task(4, 50, 2, 3, 12)


def test_batch_iter_covers_once_and_is_seeded():
    split = make_interval_task(37, 50, 16, 3, 12, seed=1)
    seen = []
    for x, labels in batch_iter(split, 8, 50):
        assert x.shape[1:] == (50, 16)
        seen.extend(labels.tolist())
    assert len(seen) == 37
    a = [l for _, lab in batch_iter(split, 8, 50, shuffle=True, seed=3)
         for l in lab.tolist()]
    b = [l for _, lab in batch_iter(split, 8, 50, shuffle=True, seed=3)
         for l in lab.tolist()]
    c = [l for _, lab in batch_iter(split, 8, 50, shuffle=True, seed=4)
         for l in lab.tolist()]
    assert a == b
    assert sorted(a) == sorted(c)
    with pytest.raises(ValueError):
        next(batch_iter(split, 0, 50))
