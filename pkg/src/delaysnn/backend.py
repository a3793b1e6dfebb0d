"""Backend selection for the eval-mode hot loop.

The compiled Cython kernels are used when the extension built successfully;
set DELAYSNN_PURE=1 to force the pure-numpy fallback. Both backends share
the same contract and are compared in tests and benchmarks.
"""

from __future__ import annotations

import os

import numpy as np

from . import _evalpy
from .recurrent import RecurrentKernel

if os.environ.get("DELAYSNN_PURE"):
    _core = None
else:
    try:
        from . import _evalcore as _core
    except ImportError:
        _core = None

HAS_COMPILED = _core is not None
BACKEND_NAME = "compiled" if HAS_COMPILED else "pure"


def _impl(name: str, backend: str | None):
    if backend not in (None, "auto", "pure", "compiled"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "compiled" and _core is None:
        raise RuntimeError("compiled backend requested but extension not built")
    mod = _evalpy if backend == "pure" or _core is None else _core
    return getattr(mod, name)


def lif_forward_eval(current: np.ndarray, kernel: RecurrentKernel,
                     offsets: np.ndarray, beta: float, v_th: float,
                     hard: bool, backend: str | None = None) -> np.ndarray:
    """Run the fused LIF + delay-scheduling loop over all time steps.

    current: (B, T, N) input currents (feedforward path, already normalized);
    offsets: (N,) integer arrival offsets 1 + d_j (eval mode: sigma = 0).
    Returns binary spikes (B, T, N).
    """
    current = np.ascontiguousarray(current, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if kernel.kind == "conv":
        fn = _impl("lif_forward_conv", backend)
        return fn(current, np.ascontiguousarray(kernel.w), offsets, beta, v_th, hard)
    fn = _impl("lif_forward_dense", backend)
    return fn(current, np.ascontiguousarray(kernel.w), offsets, beta, v_th, hard)
