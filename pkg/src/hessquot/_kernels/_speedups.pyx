# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch kernels.

Signature-for-signature mirror of ``reference.py``; typed loops over
contiguous float64 arrays replace the numpy temporaries.
"""

import numpy as np

cimport cython
from libc.math cimport acos, cos, fabs, sqrt

IMPLEMENTATION = "cython"

cdef double TWO_PI_THIRD = 2.0943951023931953


cdef inline double[:, ::1] _as2d(object lam):
    arr = np.ascontiguousarray(lam, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a (samples, n) array")
    return arr


def sigma12(object lam):
    """First and second elementary symmetric functions, batched row-wise."""
    cdef double[:, ::1] a = _as2d(lam)
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1], i, j
    s1_arr = np.empty(m)
    s2_arr = np.empty(m)
    cdef double[::1] s1 = s1_arr, s2 = s2_arr
    cdef double t, q, v
    for i in range(m):
        t = 0.0
        q = 0.0
        for j in range(n):
            v = a[i, j]
            t += v
            q += v * v
        s1[i] = t
        s2[i] = 0.5 * (t * t - q)
    return s1_arr, s2_arr


def quotient_value_grad(object lam):
    """Value and eigenvalue gradient of sigma2/sigma1, batched.

    Same all-positive-terms gradient form as the reference kernel; rows
    must have sigma1 > 0 (caller's guard).
    """
    cdef double[:, ::1] a = _as2d(lam)
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1], i, j
    f_arr = np.empty(m)
    g_arr = np.empty((m, n))
    cdef double[::1] f = f_arr
    cdef double[:, ::1] g = g_arr
    cdef double t, q, v, ss, rest
    for i in range(m):
        t = 0.0
        q = 0.0
        for j in range(n):
            v = a[i, j]
            t += v
            q += v * v
        ss = t * t
        f[i] = 0.5 * (ss - q) / t
        for j in range(n):
            v = a[i, j]
            rest = t - v
            g[i, j] = 0.5 * ((q - v * v) + rest * rest) / ss
    return f_arr, g_arr


def sigma2_value_grad(object lam):
    """Value and eigenvalue gradient of sigma2, batched."""
    cdef double[:, ::1] a = _as2d(lam)
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1], i, j
    f_arr = np.empty(m)
    g_arr = np.empty((m, n))
    cdef double[::1] f = f_arr
    cdef double[:, ::1] g = g_arr
    cdef double t, q, v
    for i in range(m):
        t = 0.0
        q = 0.0
        for j in range(n):
            v = a[i, j]
            t += v
            q += v * v
        f[i] = 0.5 * (t * t - q)
        for j in range(n):
            g[i, j] = t - a[i, j]
    return f_arr, g_arr


def eigvals_sym2(object a11, object a12, object a22):
    """Eigenvalues of symmetric 2x2 matrices, descending, batched."""
    cdef double[::1] x11 = np.ascontiguousarray(a11, dtype=np.float64).ravel()
    cdef double[::1] x12 = np.ascontiguousarray(a12, dtype=np.float64).ravel()
    cdef double[::1] x22 = np.ascontiguousarray(a22, dtype=np.float64).ravel()
    cdef Py_ssize_t m = x11.shape[0], i
    out_arr = np.empty((m, 2))
    cdef double[:, ::1] out = out_arr
    cdef double mean, half, disc
    for i in range(m):
        mean = 0.5 * (x11[i] + x22[i])
        half = 0.5 * (x11[i] - x22[i])
        disc = sqrt(half * half + x12[i] * x12[i])
        out[i, 0] = mean + disc
        out[i, 1] = mean - disc
    return out_arr.reshape(np.shape(a11) + (2,))


def eigvals_sym3(object a11, object a12, object a13,
                 object a22, object a23, object a33):
    """Eigenvalues of symmetric 3x3 matrices, descending, batched."""
    cdef double[::1] x11 = np.ascontiguousarray(a11, dtype=np.float64).ravel()
    cdef double[::1] x12 = np.ascontiguousarray(a12, dtype=np.float64).ravel()
    cdef double[::1] x13 = np.ascontiguousarray(a13, dtype=np.float64).ravel()
    cdef double[::1] x22 = np.ascontiguousarray(a22, dtype=np.float64).ravel()
    cdef double[::1] x23 = np.ascontiguousarray(a23, dtype=np.float64).ravel()
    cdef double[::1] x33 = np.ascontiguousarray(a33, dtype=np.float64).ravel()
    cdef Py_ssize_t m = x11.shape[0], i
    out_arr = np.empty((m, 3))
    cdef double[:, ::1] out = out_arr
    cdef double q, d1, d2, d3, p1, p2, p, pinv
    cdef double b11, b12, b13, b22, b23, b33, detb, r, phi, e1, e3
    for i in range(m):
        q = (x11[i] + x22[i] + x33[i]) / 3.0
        d1 = x11[i] - q
        d2 = x22[i] - q
        d3 = x33[i] - q
        p1 = x12[i] * x12[i] + x13[i] * x13[i] + x23[i] * x23[i]
        p2 = d1 * d1 + d2 * d2 + d3 * d3 + 2.0 * p1
        p = sqrt(p2 / 6.0)
        if p == 0.0:
            out[i, 0] = q
            out[i, 1] = q
            out[i, 2] = q
            continue
        pinv = 1.0 / p
        b11 = d1 * pinv
        b22 = d2 * pinv
        b33 = d3 * pinv
        b12 = x12[i] * pinv
        b13 = x13[i] * pinv
        b23 = x23[i] * pinv
        detb = (b11 * (b22 * b33 - b23 * b23)
                - b12 * (b12 * b33 - b23 * b13)
                + b13 * (b12 * b23 - b22 * b13))
        r = 0.5 * detb
        if r > 1.0:
            r = 1.0
        elif r < -1.0:
            r = -1.0
        phi = acos(r) / 3.0
        e1 = q + 2.0 * p * cos(phi)
        e3 = q + 2.0 * p * cos(phi + TWO_PI_THIRD)
        out[i, 0] = e1
        out[i, 1] = 3.0 * q - e1 - e3
        out[i, 2] = e3
    return out_arr.reshape(np.shape(a11) + (3,))


def hessian_fields_2d(object u, double h):
    """Central second differences of a 2-d grid array at interior points."""
    cdef double[:, ::1] a = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n0 = a.shape[0], n1 = a.shape[1], i, j
    cdef double hh = h * h, qh = 4.0 * h * h, c
    uxx_arr = np.empty((n0 - 2, n1 - 2))
    uyy_arr = np.empty((n0 - 2, n1 - 2))
    uxy_arr = np.empty((n0 - 2, n1 - 2))
    cdef double[:, ::1] uxx = uxx_arr, uyy = uyy_arr, uxy = uxy_arr
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            c = a[i, j]
            uxx[i - 1, j - 1] = (a[i + 1, j] - 2.0 * c + a[i - 1, j]) / hh
            uyy[i - 1, j - 1] = (a[i, j + 1] - 2.0 * c + a[i, j - 1]) / hh
            uxy[i - 1, j - 1] = (a[i + 1, j + 1] - a[i + 1, j - 1]
                                 - a[i - 1, j + 1] + a[i - 1, j - 1]) / qh
    return uxx_arr, uyy_arr, uxy_arr


def hessian_fields_3d(object u, double h):
    """Central second differences of a 3-d grid array at interior points."""
    cdef double[:, :, ::1] a = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n0 = a.shape[0], n1 = a.shape[1], n2 = a.shape[2], i, j, k
    cdef double hh = h * h, qh = 4.0 * h * h, c
    shape = (n0 - 2, n1 - 2, n2 - 2)
    uxx_arr = np.empty(shape)
    uyy_arr = np.empty(shape)
    uzz_arr = np.empty(shape)
    uxy_arr = np.empty(shape)
    uxz_arr = np.empty(shape)
    uyz_arr = np.empty(shape)
    cdef double[:, :, ::1] uxx = uxx_arr, uyy = uyy_arr, uzz = uzz_arr
    cdef double[:, :, ::1] uxy = uxy_arr, uxz = uxz_arr, uyz = uyz_arr
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                c = a[i, j, k]
                uxx[i - 1, j - 1, k - 1] = (a[i + 1, j, k] - 2.0 * c + a[i - 1, j, k]) / hh
                uyy[i - 1, j - 1, k - 1] = (a[i, j + 1, k] - 2.0 * c + a[i, j - 1, k]) / hh
                uzz[i - 1, j - 1, k - 1] = (a[i, j, k + 1] - 2.0 * c + a[i, j, k - 1]) / hh
                uxy[i - 1, j - 1, k - 1] = (a[i + 1, j + 1, k] - a[i + 1, j - 1, k]
                                            - a[i - 1, j + 1, k] + a[i - 1, j - 1, k]) / qh
                uxz[i - 1, j - 1, k - 1] = (a[i + 1, j, k + 1] - a[i + 1, j, k - 1]
                                            - a[i - 1, j, k + 1] + a[i - 1, j, k - 1]) / qh
                uyz[i - 1, j - 1, k - 1] = (a[i, j + 1, k + 1] - a[i, j + 1, k - 1]
                                            - a[i, j - 1, k + 1] + a[i, j - 1, k - 1]) / qh
    return uxx_arr, uyy_arr, uzz_arr, uxy_arr, uxz_arr, uyz_arr
