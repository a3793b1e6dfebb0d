import numpy as np
import pytest
from hypothesis import given, strategies as st

from delaysnn.delays import (BufferSizeError, DelayVector, SchedulingBuffer,
                             SpreadConfig, anneal, buffer_length, delay_stats,
                             init_delays, max_offset, round_for_inference,
                             schedule, spread, spread_grad_d, spread_matrix,
                             spread_matrix_grad)


# ---------------------------------------------------------------- spread

def test_spread_integer_delay_sigma_zero():
    # single arrival at tau = 1 + d
    for tau in range(8):
        expect = 1.0 if tau == 4 else 0.0
        assert spread(tau, 3.0, 0.0) == pytest.approx(expect, abs=1e-12)


def test_spread_fractional_delay_sigma_zero():
    assert spread(3, 2.3, 0.0) == pytest.approx(0.7, abs=1e-12)
    assert spread(4, 2.3, 0.0) == pytest.approx(0.3, abs=1e-12)
    assert spread(2, 2.3, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert spread(5, 2.3, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_spread_sigma_one():
    vals = {1: 0.0, 2: 0.25, 3: 0.5, 4: 0.25, 5: 0.0}
    for tau, expect in vals.items():
        assert spread(tau, 2.0, 1.0) == pytest.approx(expect, abs=1e-12)


def test_spread_grad_worked_values():
    assert spread_grad_d(3, 2.3, 0.0) == pytest.approx(-1.0, abs=1e-12)
    assert spread_grad_d(4, 2.0, 1.0) == pytest.approx(0.25, abs=1e-12)
    # zero at the apex and outside the support
    assert spread_grad_d(3, 2.0, 0.0) == 0.0
    assert spread_grad_d(9, 2.0, 1.0) == 0.0


def test_spread_normalizes_at_sigma_zero():
    rng = np.random.default_rng(7)
    d = rng.uniform(0.0, 64.0, size=1000)
    taus = np.arange(0, 68)[:, None]
    total = spread(taus, d[None, :], 0.0).sum(axis=0)
    assert np.allclose(total, 1.0, atol=1e-12)


def test_spread_negative_sigma_rejected():
    with pytest.raises(ValueError):
        spread(1, 1.0, -0.5)
    with pytest.raises(ValueError):
        spread_grad_d(1, 1.0, -0.5)


@given(st.floats(0.0, 64.0), st.floats(0.0, 12.0))
def test_spread_support_apex_nonneg(d, sigma):
    taus = np.arange(-2, int(np.ceil(d + sigma)) + 5, dtype=float)
    h = spread(taus, d, sigma)
    assert np.all(h >= 0.0)
    # zero outside |tau - (1+d)| >= 1 + sigma
    outside = np.abs(taus - (1.0 + d)) >= 1.0 + sigma
    assert np.all(h[outside] == 0.0)
    # apex value at tau = 1 + d
    assert spread(1.0 + d, d, sigma) == pytest.approx(1.0 / (1.0 + sigma), rel=1e-12)


def test_spread_matrix_shape_and_grad():
    d = np.array([0.0, 1.5, 3.0])
    m = spread_matrix(d, 0.0, 5)
    assert m.shape == (5, 3)
    assert m.sum(axis=0) == pytest.approx([1.0, 1.0, 1.0])
    g = spread_matrix_grad(d, 0.0, 5)
    # fractional delay: -1 below apex, +1 above
    assert g[1, 1] == -1.0 and g[2, 1] == 1.0


# ---------------------------------------------------------------- delay vectors

def test_round_for_inference_half_up():
    dv = DelayVector(np.array([0.0, 0.49, 0.5, 1.5, 2.49]), d_max=8.0)
    r = round_for_inference(dv)
    assert np.array_equal(r.d, [0.0, 0.0, 1.0, 2.0, 2.0])
    assert r.trainable is False


def test_init_delays_bounds_and_kinds():
    for kind in ("half_normal", "uniform"):
        dv = init_delays(500, 8.0, kind=kind, seed=3)
        assert np.all(dv.d >= 0.0) and np.all(dv.d <= 8.0)
    with pytest.raises(ValueError):
        init_delays(4, 8.0, kind="exotic")


def test_clamp_and_stats():
    dv = DelayVector(np.array([-1.0, 4.2, 99.0]), d_max=8.0)
    dv.clamp()
    assert np.array_equal(dv.d, [0.0, 4.2, 8.0])
    s = delay_stats(dv)
    assert s["min"] == 0 and s["max"] == 8
    assert s["mean"] == pytest.approx(np.mean([0.0, 4.0, 8.0]))
    with pytest.raises(ValueError):
        delay_stats(DelayVector(np.array([]), d_max=1.0))


# ---------------------------------------------------------------- annealing

def test_anneal_multiplicative_and_snap():
    c = SpreadConfig.fresh(10.36, 0.971)
    c = anneal(c)
    assert c.sigma == pytest.approx(10.36 * 0.971, abs=1e-12)
    c = SpreadConfig.fresh(0.0105, 0.9)
    c = anneal(c)
    assert c.sigma == 0.0  # exactly zero below the floor
    assert anneal(c).sigma == 0.0


def test_anneal_monotone_to_zero():
    c = SpreadConfig.fresh(10.0, 0.95)
    prev = c.sigma
    for _ in range(400):
        c = anneal(c)
        assert c.sigma <= prev
        prev = c.sigma
    assert c.sigma == 0.0


# ---------------------------------------------------------------- buffer

def test_buffer_pop_and_offset_mapping():
    buf = SchedulingBuffer(1, 2, 5)
    v = np.ones((1, 2))
    buf.add_at(3, v)          # arrives exactly 3 pops later
    assert np.all(buf.pop_current() == 0.0)
    assert np.all(buf.pop_current() == 0.0)
    got = buf.pop_current()
    assert np.all(got == 1.0)
    assert np.all(buf.pop_current() == 0.0)  # pop clears the slot


def test_buffer_accumulates_and_wraps():
    buf = SchedulingBuffer(1, 1, 3)
    buf.add_at(1, np.full((1, 1), 2.0))
    buf.add_at(1, np.full((1, 1), 3.0))
    assert buf.pop_current()[0, 0] == 5.0
    for step in range(10):  # circular reuse well past L
        buf.add_at(3, np.full((1, 1), float(step)))
        popped = buf.pop_current()
        expect = float(step - 2) if step >= 2 else 0.0
        assert popped[0, 0] == expect


def test_buffer_errors_and_acausal_drop():
    with pytest.raises(BufferSizeError):
        SchedulingBuffer(1, 1, 1)
    buf = SchedulingBuffer(1, 1, 4)
    with pytest.raises(BufferSizeError):
        buf.add_at(5, np.ones((1, 1)))
    buf.add_at(0, np.ones((1, 1)))   # acausal: silently dropped
    buf.add_at(-3, np.ones((1, 1)))
    assert buf.buf.sum() == 0.0


def test_buffer_length_covers_max_offset():
    for d_max, sigma in [(64.0, 10.36), (16.0, 3.0), (0.0, 0.0)]:
        assert buffer_length(d_max, sigma) >= max_offset(d_max, sigma)


def test_schedule_matches_manual_spread():
    delays = DelayVector(np.array([0.0, 2.3]), d_max=4.0)
    buf = SchedulingBuffer(1, 2, buffer_length(4.0, 0.0))
    ws = np.array([[1.0, 1.0]])
    schedule(buf, ws, delays, 0.0)
    arrivals = []
    for _ in range(buf.length):
        arrivals.append(buf.pop_current()[0].copy())
    arrivals = np.array(arrivals)
    # neuron 0: d=0 -> all at offset 1; neuron 1: d=2.3 -> 0.7 at 3, 0.3 at 4
    assert arrivals[0, 0] == pytest.approx(1.0)
    assert arrivals[2, 1] == pytest.approx(0.7)
    assert arrivals[3, 1] == pytest.approx(0.3)
    assert arrivals.sum() == pytest.approx(2.0)


def test_schedule_rejects_undersized_buffer():
    delays = DelayVector(np.array([6.0]), d_max=6.0)
    buf = SchedulingBuffer(1, 1, 3)
    with pytest.raises(BufferSizeError):
        schedule(buf, np.ones((1, 1)), delays, 0.0)
