"""Learnable axonal delays: triangular spread, annealing, circular scheduling.

A spike emitted at step t by neuron j with real-valued delay d_j is spread
over integer arrival offsets tau (relative to t) with weight

    h_{sigma,d}(tau) = max(0, (1 + sigma - |tau - (1 + d)|) / (1 + sigma)^2)

At sigma = 0 this is linear interpolation between the two integers nearest
1 + d (weights sum to 1). Offsets tau < 1 would violate causality and are
dropped by the scheduler; their spread weight only becomes nonzero while
sigma is still large.

The scheduling buffer is circular along its last axis. `head` always points
at the slot the next pop returns, i.e. scheduling happens after the current
step's pop, so an arrival offset tau maps to slot (head + tau - 1) mod L.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


def spread(tau, d, sigma: float):
    """Triangular spread weight h_{sigma,d}(tau); broadcasts over arrays."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    tau = np.asarray(tau, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    return np.maximum(0.0, (1.0 + sigma - np.abs(tau - (1.0 + d))) / (1.0 + sigma) ** 2)


def spread_grad_d(tau, d, sigma: float):
    """d h_{sigma,d}(tau) / d d: sign(tau - (1+d)) / (1+sigma)^2 on the open
    support, 0 outside and 0 at the kinks (subgradient convention)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    tau = np.asarray(tau, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    diff = tau - (1.0 + d)
    inside = (np.abs(diff) > 0.0) & (np.abs(diff) < 1.0 + sigma)
    return np.where(inside, np.sign(diff) / (1.0 + sigma) ** 2, 0.0)


def max_offset(d_max: float, sigma: float) -> int:
    """Largest arrival offset with possibly nonzero spread weight."""
    return int(np.ceil(d_max + sigma + 2.0))


def spread_matrix(delays: np.ndarray, sigma: float, n_offsets: int) -> np.ndarray:
    """Spread coefficients for offsets 1..n_offsets, shape (n_offsets, N)."""
    taus = np.arange(1, n_offsets + 1, dtype=np.float64)[:, None]
    return spread(taus, delays[None, :], sigma)


def spread_matrix_grad(delays: np.ndarray, sigma: float, n_offsets: int) -> np.ndarray:
    taus = np.arange(1, n_offsets + 1, dtype=np.float64)[:, None]
    return spread_grad_d(taus, delays[None, :], sigma)


@dataclass
class DelayVector:
    d: np.ndarray
    d_max: float
    trainable: bool = True

    def clamp(self):
        np.clip(self.d, 0.0, self.d_max, out=self.d)


def init_delays(n: int, d_max: float, kind: str = "half_normal", seed: int = 0) -> DelayVector:
    """Half-normal |N(0, (d_max/4)^2)| or uniform over [0, d_max]."""
    rng = np.random.default_rng(seed)
    if kind == "half_normal":
        d = np.abs(rng.normal(0.0, d_max / 4.0, size=n))
    elif kind == "uniform":
        d = rng.uniform(0.0, d_max, size=n)
    else:
        raise ValueError(f"unknown delay init {kind!r}")
    dv = DelayVector(d=d, d_max=d_max)
    dv.clamp()
    return dv


def round_for_inference(delays: DelayVector) -> DelayVector:
    """Round each delay half-up to the nearest integer and freeze."""
    return DelayVector(d=np.floor(delays.d + 0.5), d_max=delays.d_max, trainable=False)


def delay_stats(delays: DelayVector) -> dict:
    """Population statistics over rounded delays (Mean/Std/Range schema)."""
    if len(delays.d) == 0:
        raise ValueError("empty delay vector")
    d = np.floor(delays.d + 0.5)
    return {
        "mean": float(d.mean()),
        "std": float(d.std()),
        "min": int(d.min()),
        "max": int(d.max()),
    }


@dataclass(frozen=True)
class SpreadConfig:
    sigma: float
    sigma_init: float
    sigma_decay: float
    sigma_floor: float = 0.01

    @classmethod
    def fresh(cls, sigma_init: float, sigma_decay: float, sigma_floor: float = 0.01):
        return cls(sigma=sigma_init, sigma_init=sigma_init,
                   sigma_decay=sigma_decay, sigma_floor=sigma_floor)


def anneal(config: SpreadConfig) -> SpreadConfig:
    """One epoch of multiplicative annealing; snaps to exactly 0 below the floor."""
    sigma = config.sigma * config.sigma_decay
    if sigma < config.sigma_floor:
        sigma = 0.0
    return replace(config, sigma=sigma)


class BufferSizeError(ValueError):
    pass


def buffer_length(d_max: float, sigma_init: float) -> int:
    # covers the maximal spread support plus one pop-ahead slot
    return int(np.ceil(d_max + sigma_init + 2.0)) + 1


class SchedulingBuffer:
    """Circular (B, N, L) buffer of future recurrent input currents."""

    def __init__(self, batch: int, n: int, length: int):
        if length < 2:
            raise BufferSizeError("buffer length must be >= 2")
        self.buf = np.zeros((batch, n, length), dtype=np.float64)
        self.head = 0
        self.length = length

    def pop_current(self) -> np.ndarray:
        """Return the head slot, zero it, advance the head."""
        out = self.buf[:, :, self.head].copy()
        self.buf[:, :, self.head] = 0.0
        self.head = (self.head + 1) % self.length
        return out

    def add_at(self, tau: int, values: np.ndarray):
        """Accumulate values (B, N) at arrival offset tau >= 1 steps ahead."""
        if tau > self.length:
            raise BufferSizeError(f"offset {tau} exceeds buffer length {self.length}")
        if tau < 1:
            return  # acausal offsets carry no scheduled contribution
        self.buf[:, :, (self.head + tau - 1) % self.length] += values


def schedule(buffer: SchedulingBuffer, weighted_spikes: np.ndarray,
             delays: DelayVector, sigma: float) -> SchedulingBuffer:
    """Spread per-neuron weighted spikes into future buffer slots."""
    n_off = max_offset(float(delays.d.max(initial=0.0)), sigma)
    if n_off > buffer.length:
        raise BufferSizeError(f"spread support {n_off} exceeds buffer length {buffer.length}")
    coefs = spread_matrix(delays.d, sigma, n_off)
    for i in range(n_off):
        if coefs[i].any():
            buffer.add_at(i + 1, coefs[i][None, :] * weighted_spikes)
    return buffer
