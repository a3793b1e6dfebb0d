"""Recurrent connectivity: dense matrix baseline vs 1D convolutional kernel.

The conv path is a cross-correlation (no kernel flip) along the neuron axis
with stride 1 and symmetric zero padding:

    y[i] = sum_m w[m] * x[i + m - (k-1)/2]

which equals applying the banded dense matrix W[i, j] = w[j - i + (k-1)/2].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d


@dataclass
class RecurrentKernel:
    kind: str  # "dense" | "conv"
    w: np.ndarray  # (N, N) when dense, (k,) when conv
    n: int
    k: int = 0

    def __post_init__(self):
        if self.kind == "conv":
            if self.k % 2 == 0:
                raise ValueError("conv kernel size must be odd")
            assert self.w.shape == (self.k,)
        elif self.kind == "dense":
            assert self.w.shape == (self.n, self.n)
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")


def init_kernel(kind: str, n: int, k: int = 3, seed: int = 0) -> RecurrentKernel:
    """Kaiming-uniform init: U(-sqrt(6/fan_in), +sqrt(6/fan_in))."""
    rng = np.random.default_rng(seed)
    if kind == "conv":
        bound = np.sqrt(6.0 / k)
        w = rng.uniform(-bound, bound, size=k)
    else:
        bound = np.sqrt(6.0 / n)
        w = rng.uniform(-bound, bound, size=(n, n))
    return RecurrentKernel(kind=kind, w=w, n=n, k=k)


def apply_recurrent(kernel: RecurrentKernel, x: np.ndarray) -> np.ndarray:
    """y_i = sum_j W_ij x_j along the last axis; x is (..., N)."""
    if kernel.kind == "dense":
        return x @ kernel.w.T
    return correlate1d(x, kernel.w, axis=-1, mode="constant", cval=0.0)


def apply_recurrent_transpose(kernel: RecurrentKernel, g: np.ndarray) -> np.ndarray:
    """(W^T g) along the last axis, the adjoint of apply_recurrent."""
    if kernel.kind == "dense":
        return g @ kernel.w
    return correlate1d(g, kernel.w[::-1], axis=-1, mode="constant", cval=0.0)


def kernel_weight_grad(kernel: RecurrentKernel, g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient of sum(g * apply_recurrent(kernel, x)) w.r.t. the weights.

    g and x have shape (..., N) with matching leading axes.
    """
    gf = g.reshape(-1, kernel.n)
    xf = x.reshape(-1, kernel.n)
    if kernel.kind == "dense":
        return gf.T @ xf
    c = (kernel.k - 1) // 2
    xp = np.pad(xf, ((0, 0), (c, c)))
    gw = np.empty(kernel.k)
    for m in range(kernel.k):
        gw[m] = np.sum(gf * xp[:, m:m + kernel.n])
    return gw


def conv_to_banded(w_conv: np.ndarray, n: int) -> np.ndarray:
    """Dense (N, N) matrix equivalent to the conv kernel (test oracle)."""
    k = len(w_conv)
    c = (k - 1) // 2
    w = np.zeros((n, n))
    for i in range(n):
        for m in range(k):
            j = i + m - c
            if 0 <= j < n:
                w[i, j] = w_conv[m]
    return w


def count_recurrent_params(kind: str, n: int, k: int = 3) -> dict:
    """Per-layer recurrent parameter counts: dense N^2+N vs conv k+N."""
    weights = n * n if kind == "dense" else k
    return {"weights": weights, "delays": n, "total": weights + n}
