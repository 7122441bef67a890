# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gaussian kernel loops on pre-whitened points."""

import numpy as np
from libc.math cimport exp


def gram(const double[:, ::1] Z1, const double[:, ::1] Z2):
    cdef Py_ssize_t n = Z1.shape[0], m = Z2.shape[0], d = Z1.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] G = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = Z1[i, k] - Z2[j, k]
                    acc = acc + diff * diff
                G[i, j] = exp(-acc)
    return out


def kernel_sum(const double[:, ::1] Z, const double[:, ::1] centers, const double[::1] coeffs):
    cdef Py_ssize_t n = Z.shape[0], m = centers.shape[0], d = Z.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] r = out
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = Z[i, k] - centers[j, k]
                    acc = acc + diff * diff
                s = s + coeffs[j] * exp(-acc)
            r[i] = s
    return out
