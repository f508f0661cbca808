# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the functions in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos

cnp.import_array()


def cumulative_quaternions(seg):
    cdef const double[:, ::1] s = np.ascontiguousarray(seg, dtype=np.float64)
    cdef Py_ssize_t N = s.shape[0], j
    out_arr = np.empty((N + 1, 4))
    cdef double[:, ::1] out = out_arr
    cdef double a = 1.0, b = 0.0, c = 0.0, d = 0.0
    cdef double e, f, g, h, na, nb, nc, nd
    out[0, 0] = a
    out[0, 1] = b
    out[0, 2] = c
    out[0, 3] = d
    for j in range(N):
        e = s[j, 0]
        f = s[j, 1]
        g = s[j, 2]
        h = s[j, 3]
        na = e * a - f * b - g * c - h * d
        nb = e * b + f * a + g * d - h * c
        nc = e * c - f * d + g * a + h * b
        nd = e * d + f * c - g * b + h * a
        a = na
        b = nb
        c = nc
        d = nd
        out[j + 1, 0] = a
        out[j + 1, 1] = b
        out[j + 1, 2] = c
        out[j + 1, 3] = d
    return out_arr


def noisy_final_quaternions(ax, ay, beta):
    cdef const double[::1] x = np.ascontiguousarray(ax, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(ay, dtype=np.float64)
    cdef const double[:, :, ::1] bt = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t R = bt.shape[0], N = bt.shape[2], r, n
    out_arr = np.empty((R, 4))
    cdef double[:, ::1] out = out_arr
    cdef double a, b, c, d, e, f, g, h, hx, hy, hz, nr, sr, na, nb, nc, nd
    for r in range(R):
        a = 1.0
        b = 0.0
        c = 0.0
        d = 0.0
        for n in range(N):
            hx = 0.5 * x[n] + bt[r, 0, n]
            hy = 0.5 * y[n] + bt[r, 1, n]
            hz = bt[r, 2, n]
            nr = sqrt(hx * hx + hy * hy + hz * hz)
            e = cos(nr)
            if nr > 0.0:
                sr = sin(nr) / nr
            else:
                sr = 1.0
            f = sr * hx
            g = sr * hy
            h = sr * hz
            na = e * a - f * b - g * c - h * d
            nb = e * b + f * a + g * d - h * c
            nc = e * c - f * d + g * a + h * b
            nd = e * d + f * c - g * b + h * a
            a = na
            b = nb
            c = nc
            d = nd
        out[r, 0] = a
        out[r, 1] = b
        out[r, 2] = c
        out[r, 3] = d
    return out_arr


def ou_recursion(beta0, w, double decay, double gain):
    w_arr = np.asarray(w, dtype=np.float64)
    # wraparound is off, so no negative indices on the shape tuple
    lead = tuple(w_arr.shape[:w_arr.ndim - 1])
    cdef Py_ssize_t L = w_arr.shape[w_arr.ndim - 1], M = w_arr.size // L if L else 0, i, n
    cdef const double[:, ::1] ww = np.ascontiguousarray(w_arr.reshape(M, L))
    cdef double[::1] b0 = np.array(np.broadcast_to(beta0, lead).reshape(M), dtype=np.float64)
    out_arr = np.empty((M, L + 1))
    cdef double[:, ::1] out = out_arr
    cdef double prev
    for i in range(M):
        prev = b0[i]
        out[i, 0] = prev
        for n in range(L):
            prev = decay * prev + gain * ww[i, n]
            out[i, n + 1] = prev
    return out_arr.reshape(lead + (L + 1,))
