"""HDF5 (SHD/SSC public layout) to SPKE conversion and split handling.

The public archives store per-sample spike times as float seconds and
channel indices from a 700-band front end. Conversion truncates times to
integer microseconds (truncation, not rounding, for reproducibility),
sorts events by time, and sets duration_us to the last event time, or
10^6 us for empty samples.
"""

from __future__ import annotations

import json

import h5py
import numpy as np

from .spke import Sample, SpkeFile, read, write

C_RAW = 700
EMPTY_DURATION_US = 1_000_000


class ConvertError(ValueError):
    pass


def _n_classes_for(labels: np.ndarray) -> int:
    # SHD has 20 classes, SSC has 35; infer from the label space
    if labels.size == 0 or labels.max() < 20:
        return 20
    if labels.max() < 35:
        return 35
    raise ConvertError(f"label {int(labels.max())} outside SHD/SSC range")


def convert(hdf_path, out_path) -> SpkeFile:
    """Convert one HDF5 archive to an SPKE file; returns the written data."""
    with h5py.File(hdf_path, "r") as f:
        for key in ("spikes/times", "spikes/units", "labels"):
            if key not in f:
                raise ConvertError(f"missing dataset {key!r} in {hdf_path}")
        times_v = f["spikes/times"][:]
        units_v = f["spikes/units"][:]
        labels = np.asarray(f["labels"][:], dtype=np.int64)
    if not (len(times_v) == len(units_v) == len(labels)):
        raise ConvertError("times/units/labels sample counts disagree")
    samples = []
    for times_s, units, label in zip(times_v, units_v, labels):
        times_s = np.asarray(times_s, dtype=np.float64)
        units = np.asarray(units, dtype=np.int64)
        if times_s.size and times_s.min() < 0:
            raise ConvertError("negative spike time")
        if units.size and (units.min() < 0 or units.max() >= C_RAW):
            raise ConvertError(f"unit outside [0, {C_RAW})")
        times_us = (times_s * 1e6).astype(np.uint64)  # truncation
        order = np.argsort(times_us, kind="stable")
        times_us = times_us[order]
        units = units[order]
        duration = int(times_us[-1]) if times_us.size else EMPTY_DURATION_US
        samples.append(Sample(int(label), times_us,
                              units.astype(np.uint32), duration))
    data = SpkeFile(C_RAW, _n_classes_for(labels), samples)
    write(out_path, data)
    return data


def split_train_valid(in_path, out_train, out_valid, fraction: float,
                      seed: int = 0):
    """Deterministically partition an SPKE file into train/valid files.

    fraction is the train share; the union of the outputs equals the input
    and the intersection is empty. A sidecar JSON next to the train file
    records the seed and fraction.
    """
    if not (0.0 < fraction < 1.0):
        raise ConvertError("fraction must be in (0, 1)")
    data = read(in_path)
    order = np.arange(len(data.samples))
    np.random.default_rng(seed).shuffle(order)
    n_train = int(round(fraction * len(order)))
    tr = sorted(order[:n_train].tolist())
    va = sorted(order[n_train:].tolist())
    write(out_train, SpkeFile(data.c_raw, data.n_classes,
                              [data.samples[i] for i in tr]))
    write(out_valid, SpkeFile(data.c_raw, data.n_classes,
                              [data.samples[i] for i in va]))
    with open(str(out_train) + ".split.json", "w") as f:
        json.dump({"seed": seed, "train_fraction": fraction,
                   "n_train": len(tr), "n_valid": len(va)}, f, indent=2)
    return len(tr), len(va)
