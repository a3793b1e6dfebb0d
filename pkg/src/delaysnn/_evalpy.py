"""Pure-numpy eval-mode LIF/scheduling kernels (fallback backend).

Same contract as the compiled kernels in _evalcore.pyx: integer delays,
sigma = 0, binary spikes. Scheduling groups presynaptic neurons by arrival
offset so the total per-step recurrent work stays O(N^2) dense / O(Nk) conv.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d


def lif_forward_conv(current, w, offsets, beta, v_th, hard):
    B, T, N = current.shape
    L = int(offsets.max()) + 1
    buf = np.zeros((B, N, L))
    v = np.zeros((B, N))
    spikes = np.empty((B, T, N))
    groups = [(int(o), offsets == o) for o in np.unique(offsets)]
    for t in range(T):
        slot = t % L
        cur = current[:, t] + buf[:, :, slot]
        buf[:, :, slot] = 0.0
        h = beta * v + (1.0 - beta) * cur
        s = (h >= v_th).astype(np.float64)
        v = h * (1.0 - s) if hard else h - v_th * s
        spikes[:, t] = s
        for off, mask in groups:
            xs = s * mask
            if xs.any():
                buf[:, :, (t + off) % L] += correlate1d(xs, w, axis=-1,
                                                        mode="constant", cval=0.0)
    return spikes


def lif_forward_dense(current, w, offsets, beta, v_th, hard):
    B, T, N = current.shape
    L = int(offsets.max()) + 1
    buf = np.zeros((B, N, L))
    v = np.zeros((B, N))
    spikes = np.empty((B, T, N))
    groups = [(int(o), np.flatnonzero(offsets == o)) for o in np.unique(offsets)]
    for t in range(T):
        slot = t % L
        cur = current[:, t] + buf[:, :, slot]
        buf[:, :, slot] = 0.0
        h = beta * v + (1.0 - beta) * cur
        s = (h >= v_th).astype(np.float64)
        v = h * (1.0 - s) if hard else h - v_th * s
        spikes[:, t] = s
        for off, cols in groups:
            sub = s[:, cols]
            if sub.any():
                buf[:, :, (t + off) % L] += sub @ w[:, cols].T
    return spikes
