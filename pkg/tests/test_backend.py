"""Equivalence of the compiled and pure eval backends.

The compiled path must reproduce the pure-numpy path bit for bit, including
on asymmetric conv kernels (where a silent kernel flip would go unnoticed
with symmetric weights).
"""

import numpy as np
import pytest

from delaysnn import _evalpy, backend
from delaysnn.recurrent import RecurrentKernel, conv_to_banded, init_kernel

needs_compiled = pytest.mark.skipif(not backend.HAS_COMPILED,
                                    reason="compiled extension not built")


def _random_case(seed, kind):
    rng = np.random.default_rng(seed)
    B, T, N = 3, 40, 24
    kernel = init_kernel(kind, N, 3, seed=seed)
    current = np.ascontiguousarray(rng.normal(0.5, 1.0, size=(B, T, N)))
    offsets = np.ascontiguousarray(1 + rng.integers(0, 17, size=N),
                                   dtype=np.int64)
    return current, kernel, offsets


@needs_compiled
@pytest.mark.parametrize("kind", ["conv", "dense"])
@pytest.mark.parametrize("hard", [True, False])
def test_compiled_matches_pure(kind, hard):
    for seed in range(10):
        current, kernel, offsets = _random_case(seed, kind)
        sp = backend.lif_forward_eval(current, kernel, offsets, 0.5, 1.0,
                                      hard, backend="pure")
        sc = backend.lif_forward_eval(current, kernel, offsets, 0.5, 1.0,
                                      hard, backend="compiled")
        assert np.array_equal(sp, sc)


@needs_compiled
def test_compiled_asymmetric_kernel_orientation():
    # w = [1, 0, 0] means neuron i listens to its LEFT neighbour i-1;
    # a flipped scatter would route spikes the other way.
    N, T = 6, 6
    kernel = RecurrentKernel(kind="conv", w=np.array([5.0, 0.0, 0.0]), n=N, k=3)
    current = np.zeros((1, T, N))
    current[0, 0, 2] = 10.0  # neuron 2 spikes at t = 0
    offsets = np.ones(N, dtype=np.int64)
    for which in ("pure", "compiled"):
        s = backend.lif_forward_eval(current, kernel, offsets, 0.5, 1.0,
                                     True, backend=which)
        assert s[0, 0, 2] == 1.0
        assert s[0, 1, 3] == 1.0, which  # arrives at the RIGHT neighbour
        assert s[0, 1, 1] == 0.0, which


def test_conv_backend_matches_dense_banded():
    # same network expressed densely must spike identically
    for seed in range(5):
        current, kernel, offsets = _random_case(seed, "conv")
        dense = RecurrentKernel(kind="dense",
                                w=conv_to_banded(kernel.w, kernel.n),
                                n=kernel.n)
        a = _evalpy.lif_forward_conv(current, kernel.w, offsets, 0.5, 1.0, True)
        b = _evalpy.lif_forward_dense(current, dense.w, offsets, 0.5, 1.0, True)
        assert np.array_equal(a, b)


def test_backend_dispatch_errors():
    current, kernel, offsets = _random_case(0, "conv")
    with pytest.raises(ValueError, match="unknown backend"):
        backend.lif_forward_eval(current, kernel, offsets, 0.5, 1.0, True,
                                 backend="gpu")


def test_zero_delay_arrives_next_step():
    # offset 1 (d = 0): a spike at t feeds recurrent input at t + 1
    N = 3
    kernel = RecurrentKernel(kind="conv", w=np.array([0.0, 5.0, 0.0]), n=N, k=3)
    current = np.zeros((1, 4, N))
    current[0, 0, 1] = 10.0
    offsets = np.ones(N, dtype=np.int64)
    s = _evalpy.lif_forward_conv(current, kernel.w, offsets, 0.5, 1.0, True)
    assert s[0, 0, 1] == 1.0 and s[0, 1, 1] == 1.0


def test_delayed_arrival_timing():
    N = 1
    kernel = RecurrentKernel(kind="conv", w=np.array([0.0, 5.0, 0.0]), n=N, k=3)
    current = np.zeros((1, 10, N))
    current[0, 0, 0] = 10.0
    offsets = np.array([4], dtype=np.int64)  # d = 3
    s = _evalpy.lif_forward_conv(current, kernel.w, offsets, 0.5, 1.0, True)
    assert s[0, :, 0].tolist() == [1, 0, 0, 0, 1, 0, 0, 0, 1, 0]
