# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled eval-mode LIF/scheduling kernels (hot inference loop)."""

import numpy as np
cimport numpy as cnp


def lif_forward_conv(double[:, :, ::1] current, double[::1] w,
                     cnp.int64_t[::1] offsets, double beta, double v_th,
                     bint hard):
    cdef Py_ssize_t B = current.shape[0]
    cdef Py_ssize_t T = current.shape[1]
    cdef Py_ssize_t N = current.shape[2]
    cdef Py_ssize_t k = w.shape[0]
    cdef Py_ssize_t c = (k - 1) // 2
    cdef Py_ssize_t L = 2
    cdef Py_ssize_t b, t, i, j, m, slot, tgt
    for j in range(N):
        if offsets[j] + 1 > L:
            L = offsets[j] + 1
    buf_np = np.zeros((B, N, L))
    spikes_np = np.empty((B, T, N))
    v_np = np.zeros((B, N))
    cdef double[:, :, ::1] buf = buf_np
    cdef double[:, :, ::1] spikes = spikes_np
    cdef double[:, ::1] v = v_np
    cdef double h, cur, s
    for t in range(T):
        slot = t % L
        for b in range(B):
            for i in range(N):
                cur = current[b, t, i] + buf[b, i, slot]
                buf[b, i, slot] = 0.0
                h = beta * v[b, i] + (1.0 - beta) * cur
                s = 1.0 if h >= v_th else 0.0
                spikes[b, t, i] = s
                if hard:
                    v[b, i] = h * (1.0 - s)
                else:
                    v[b, i] = h - v_th * s
            for j in range(N):
                if spikes[b, t, j] != 0.0:
                    tgt = (t + offsets[j]) % L
                    # cross-correlation: target i = j + c - m receives w[m]
                    for m in range(k):
                        i = j + c - m
                        if 0 <= i < N:
                            buf[b, i, tgt] += w[m]
    return spikes_np


def lif_forward_dense(double[:, :, ::1] current, double[:, ::1] w,
                      cnp.int64_t[::1] offsets, double beta, double v_th,
                      bint hard):
    cdef Py_ssize_t B = current.shape[0]
    cdef Py_ssize_t T = current.shape[1]
    cdef Py_ssize_t N = current.shape[2]
    cdef Py_ssize_t L = 2
    cdef Py_ssize_t b, t, i, j, slot, tgt
    for j in range(N):
        if offsets[j] + 1 > L:
            L = offsets[j] + 1
    buf_np = np.zeros((B, N, L))
    spikes_np = np.empty((B, T, N))
    v_np = np.zeros((B, N))
    cdef double[:, :, ::1] buf = buf_np
    cdef double[:, :, ::1] spikes = spikes_np
    cdef double[:, ::1] v = v_np
    cdef double h, cur, s
    for t in range(T):
        slot = t % L
        for b in range(B):
            for i in range(N):
                cur = current[b, t, i] + buf[b, i, slot]
                buf[b, i, slot] = 0.0
                h = beta * v[b, i] + (1.0 - beta) * cur
                s = 1.0 if h >= v_th else 0.0
                spikes[b, t, i] = s
                if hard:
                    v[b, i] = h * (1.0 - s)
                else:
                    v[b, i] = h - v_th * s
            for j in range(N):
                if spikes[b, t, j] != 0.0:
                    tgt = (t + offsets[j]) % L
                    for i in range(N):
                        buf[b, i, tgt] += w[i, j]
    return spikes_np
