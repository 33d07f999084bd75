"""Bounded-variable primal simplex on a dense tableau.

Two phases with artificial columns, Dantzig pricing with a switch to Bland's
rule after a run of degenerate pivots, and periodic refactorization from the
original columns to keep drift in check. The pivoting loop lives in a compiled
kernel when available and in numpy otherwise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _simplex_py

if os.environ.get("TWTL_RELAX_PURE_PYTHON"):
    _ext = None
else:
    try:
        from . import _simplex_ext as _ext
    except ImportError:  # extension not built
        _ext = None

KERNEL = "compiled" if _ext is not None else "python"

OPTIMAL, INFEASIBLE, UNBOUNDED, ITER_LIMIT, NUMERICAL = "optimal", "infeasible", "unbounded", "iteration_limit", "numerical"


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0


def _kernel(name):
    if name == "python":
        return _simplex_py.iterate
    if name == "compiled":
        if _ext is None:
            raise RuntimeError("compiled simplex kernel is not available")
        return _ext.iterate
    return (_ext or _simplex_py).iterate


def solve_dense(c, A, b, lb, ub, *, kernel: str = "auto", tol: float = 1e-9,
                feas_tol: float = 1e-7, max_iter: int = 100_000, refactor_every: int = 200) -> LpResult:
    """Minimize ``c x`` subject to ``A x = b`` and ``lb <= x <= ub`` (finite ``lb``)."""
    iterate = _kernel(kernel)
    A = np.ascontiguousarray(A, dtype=np.float64)
    m, n = A.shape
    c = np.asarray(c, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lb = np.asarray(lb, dtype=np.float64)
    ub = np.asarray(ub, dtype=np.float64)
    if np.any(lb > ub + feas_tol):
        return LpResult(INFEASIBLE)
    if not np.all(np.isfinite(lb)):
        raise ValueError("lower bounds must be finite")

    residual = b - A @ lb
    sign = np.where(residual >= 0, 1.0, -1.0)
    M = np.empty((m, n + m))
    M[:, :n] = A * sign[:, None]
    M[:, n:] = np.eye(m)
    rhs = b * sign
    lo = np.concatenate([lb, np.zeros(m)])
    hi = np.concatenate([ub, np.full(m, np.inf)])
    basis = np.arange(n, n + m, dtype=np.int64)
    at_upper = np.zeros(n + m, dtype=np.uint8)
    T = M.copy()
    xB = np.abs(residual)
    total = 0

    def refactor(cost):
        nonlocal T, xB
        B = M[:, basis]
        try:
            T = np.ascontiguousarray(np.linalg.solve(B, M))
        except np.linalg.LinAlgError:
            return None
        xN = np.where(at_upper.astype(bool), hi, lo)
        xN[basis] = 0.0
        xB = np.linalg.solve(B, rhs - M @ xN)
        return np.ascontiguousarray(cost - cost[basis] @ T)

    def run(cost):
        nonlocal total
        d = np.ascontiguousarray(cost - cost[basis] @ T)
        while total < max_iter:
            status, its = iterate(T, xB, basis, at_upper, lo, hi, d,
                                  min(refactor_every, max_iter - total), tol, 50)
            total += its
            d = refactor(cost)
            if d is None:
                return NUMERICAL
            if status == 2:
                return UNBOUNDED
            if status == 0:
                # confirm optimality on fresh reduced costs
                free = np.ones(n + m, dtype=bool)
                free[basis] = False
                free &= hi > lo
                up = at_upper.astype(bool)
                if not np.any(free & ((~up & (d < -tol)) | (up & (d > tol)))):
                    return OPTIMAL
        return ITER_LIMIT

    phase1 = np.concatenate([np.zeros(n), np.ones(m)])
    status = run(phase1)
    if status != OPTIMAL:
        return LpResult(NUMERICAL if status == UNBOUNDED else status, iterations=total)
    x = _values(basis, xB, at_upper, lo, hi)
    scale = 1.0 + np.abs(rhs).max(initial=0.0)
    if x[n:].sum() > feas_tol * scale:
        return LpResult(INFEASIBLE, iterations=total)
    hi[n:] = 0.0  # artificials stay at zero from here on
    status = run(np.concatenate([c, np.zeros(m)]))
    if status != OPTIMAL:
        return LpResult(status, iterations=total)
    x = _values(basis, xB, at_upper, lo, hi)[:n]
    x = np.clip(x, lb, ub)
    if np.abs(A @ x - b).max(initial=0.0) > 1e-6 * scale:
        return LpResult(NUMERICAL, iterations=total)
    return LpResult(OPTIMAL, x, float(c @ x), total)


def _values(basis, xB, at_upper, lo, hi):
    x = np.where(at_upper.astype(bool), hi, lo)
    x = np.where(np.isfinite(x), x, 0.0)
    x[basis] = xB
    return x
