"""Pure numpy pivoting kernel; the reference twin of ``_simplex_ext``."""

from __future__ import annotations

import numpy as np

OPTIMAL, UNBOUNDED, ITER_LIMIT = 0, 2, 3


def iterate(T, xB, basis, at_upper, lo, hi, d, max_iter, tol, bland_after):
    """Run bounded primal simplex pivots in place on a dense tableau.

    ``T`` holds B^-1 [A | I], ``xB`` the basic values, ``d`` the reduced costs.
    Nonbasic columns sit at ``lo`` or, when ``at_upper`` is set, at ``hi``.
    Returns ``(status, iterations)``.
    """
    m = T.shape[0]
    is_basic = np.zeros(T.shape[1], dtype=bool)
    is_basic[basis] = True
    degenerate = 0
    for it in range(max_iter):
        bland = degenerate >= bland_after
        movable = ~is_basic & (hi > lo)
        upper = at_upper.astype(bool)
        cand = movable & ((~upper & (d < -tol)) | (upper & (d > tol)))
        if not cand.any():
            return OPTIMAL, it
        if bland:
            j = int(np.flatnonzero(cand)[0])
        else:
            j = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
        direction = -1.0 if upper[j] else 1.0
        col = T[:, j] * direction
        t_flip = hi[j] - lo[j]
        r = -1
        t = t_flip
        if m:
            lo_b, hi_b = lo[basis], hi[basis]
            ratios = np.full(m, np.inf)
            pos = col > tol
            neg = col < -tol
            ratios[pos] = (xB[pos] - lo_b[pos]) / col[pos]
            ratios[neg] = (hi_b[neg] - xB[neg]) / -col[neg]
            np.maximum(ratios, 0.0, out=ratios)
            tmin = ratios.min()
            if tmin < t_flip:
                ties = np.flatnonzero(ratios <= tmin + tol)
                if bland:
                    r = int(ties[np.argmin(basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(col[ties]))])
                t = ratios[r]
        if not np.isfinite(t):
            return UNBOUNDED, it
        degenerate = degenerate + 1 if t <= tol else 0
        xB -= col * t
        if r < 0:
            at_upper[j] = not upper[j]
            continue
        leaving = basis[r]
        entering_value = (hi[j] if upper[j] else lo[j]) + direction * t
        at_upper[leaving] = col[r] < 0
        T[r] /= T[r, j]
        colj = T[:, j].copy()
        colj[r] = 0.0
        nz = np.flatnonzero(colj)
        if nz.size:
            T[nz] -= np.outer(colj[nz], T[r])
        d -= d[j] * T[r]
        xB[r] = entering_value
        basis[r] = j
        is_basic[leaving] = False
        is_basic[j] = True
        at_upper[j] = False
    return ITER_LIMIT, max_iter
