# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pivoting kernel; same contract as ``_simplex_py.iterate``."""

import numpy as np
from libc.math cimport fabs, INFINITY

cdef enum:
    OPTIMAL = 0
    UNBOUNDED = 2
    ITER_LIMIT = 3


def iterate(double[:, ::1] T, double[::1] xB, long[::1] basis, unsigned char[::1] at_upper,
            double[::1] lo, double[::1] hi, double[::1] d, int max_iter, double tol,
            int bland_after):
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t ncol = T.shape[1]
    cdef Py_ssize_t i, k, j, r, it
    cdef double best, val, direction, t, t_flip, ratio, piv, f, tmin, colr
    cdef int degenerate = 0
    cdef bint bland
    cdef unsigned char[::1] is_basic = np.zeros(ncol, dtype=np.uint8)
    cdef double[::1] col = np.empty(m, dtype=np.float64)
    for i in range(m):
        is_basic[basis[i]] = 1
    for it in range(max_iter):
        bland = degenerate >= bland_after
        j = -1
        best = 0.0
        for k in range(ncol):
            if is_basic[k] or hi[k] <= lo[k]:
                continue
            val = d[k]
            if (not at_upper[k] and val < -tol) or (at_upper[k] and val > tol):
                if bland:
                    j = k
                    break
                if fabs(val) > best:
                    best = fabs(val)
                    j = k
        if j < 0:
            return OPTIMAL, it
        direction = -1.0 if at_upper[j] else 1.0
        for i in range(m):
            col[i] = T[i, j] * direction
        t_flip = hi[j] - lo[j]
        tmin = INFINITY
        for i in range(m):
            if col[i] > tol:
                ratio = (xB[i] - lo[basis[i]]) / col[i]
            elif col[i] < -tol:
                ratio = (hi[basis[i]] - xB[i]) / -col[i]
            else:
                continue
            if ratio < 0.0:
                ratio = 0.0
            if ratio < tmin:
                tmin = ratio
        r = -1
        t = t_flip
        if tmin < t_flip:
            best = -1.0
            for i in range(m):
                if col[i] > tol:
                    ratio = (xB[i] - lo[basis[i]]) / col[i]
                elif col[i] < -tol:
                    ratio = (hi[basis[i]] - xB[i]) / -col[i]
                else:
                    continue
                if ratio < 0.0:
                    ratio = 0.0
                if ratio > tmin + tol:
                    continue
                if bland:
                    if r < 0 or basis[i] < basis[r]:
                        r = i
                elif fabs(col[i]) > best:
                    best = fabs(col[i])
                    r = i
            t = tmin
        if t == INFINITY:
            return UNBOUNDED, it
        degenerate = degenerate + 1 if t <= tol else 0
        for i in range(m):
            xB[i] -= col[i] * t
        if r < 0:
            at_upper[j] = 0 if at_upper[j] else 1
            continue
        k = basis[r]
        val = (hi[j] if at_upper[j] else lo[j]) + direction * t
        colr = col[r]
        at_upper[k] = 1 if colr < 0 else 0
        piv = T[r, j]
        for i in range(ncol):
            T[r, i] /= piv
        for i in range(m):
            if i == r:
                continue
            f = T[i, j]
            if f != 0.0:
                for k in range(ncol):
                    T[i, k] -= f * T[r, k]
        f = d[j]
        if f != 0.0:
            for k in range(ncol):
                d[k] -= f * T[r, k]
        xB[r] = val
        is_basic[basis[r]] = 0
        basis[r] = j
        is_basic[j] = 1
        at_upper[j] = 0
    return ITER_LIMIT, max_iter
