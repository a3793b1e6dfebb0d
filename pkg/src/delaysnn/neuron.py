"""LIF neuron dynamics and the spike function with arctangent surrogate.

Per discrete step:

    H[t] = beta * V[t-1] + (1 - beta) * I[t],  beta = 1 - 1/tau
    S[t] = 1 if H[t] >= v_th else 0
    V[t] = H[t] * (1 - S[t])          (hard reset)
    V[t] = H[t] - v_th * S[t]         (soft reset)

The readout variant has an infinite threshold: it never spikes and V == H,
acting as a leaky integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NumericsError(FloatingPointError):
    """NaN encountered in a step input."""


@dataclass(frozen=True)
class LifParams:
    tau: float
    v_th: float = 1.0
    reset_mode: str = "hard"  # "hard" | "soft"
    infinite_threshold: bool = False

    def __post_init__(self):
        if self.tau <= 1.0:
            raise ValueError("tau must be > 1")
        if self.reset_mode not in ("hard", "soft"):
            raise ValueError(f"unknown reset mode {self.reset_mode!r}")
        if not self.infinite_threshold and not (self.v_th > 0 and math.isfinite(self.v_th)):
            raise ValueError("v_th must be finite and positive")

    @property
    def beta(self) -> float:
        return 1.0 - 1.0 / self.tau


@dataclass
class LifState:
    v: np.ndarray  # membrane potential after reset
    h: np.ndarray  # hidden state before reset
    s: np.ndarray  # spikes in {0, 1}

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape))


def heaviside(x: np.ndarray) -> np.ndarray:
    """Theta(x) with the tie convention Theta(0) = 1."""
    return (x >= 0.0).astype(np.float64)


def surrogate_grad(x, alpha: float = 2.0):
    """Derivative of the arctangent surrogate: alpha / (2 (1 + (pi alpha x / 2)^2))."""
    return alpha / (2.0 * (1.0 + (np.pi * alpha * x / 2.0) ** 2))


def smooth_spike(x, alpha: float = 2.0):
    """Smooth primitive of surrogate_grad: arctan(pi alpha x / 2) / pi + 1/2.

    Used by the gradient-check harness as a differentiable stand-in for the
    Heaviside forward.
    """
    return np.arctan(np.pi * alpha * x / 2.0) / np.pi + 0.5


def lif_step(state: LifState, input_current: np.ndarray, params: LifParams) -> LifState:
    """Advance one step; returns a fresh LifState."""
    if np.isnan(input_current).any():
        raise NumericsError("NaN in input current")
    beta = params.beta
    h = beta * state.v + (1.0 - beta) * input_current
    if params.infinite_threshold:
        s = np.zeros_like(h)
        v = h
    else:
        s = heaviside(h - params.v_th)
        if params.reset_mode == "hard":
            v = h * (1.0 - s)
        else:
            v = h - params.v_th * s
    return LifState(v=v, h=h, s=s)


def readout_step(state: LifState, input_current: np.ndarray, params: LifParams) -> LifState:
    """Leaky-integrator step: same charge equation, no spikes, no reset."""
    if not params.infinite_threshold:
        raise ValueError("readout_step requires the infinite-threshold flag")
    return lif_step(state, input_current, params)
