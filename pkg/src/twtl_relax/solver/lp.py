"""LP relaxation of a :class:`~twtl_relax.milp.MilpModel` with swappable engines."""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .simplex import INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, LpResult, solve_dense

# dense tableau cells above which the built-in simplex hands over to HiGHS
DENSE_LIMIT = 400_000


class Relaxation:
    """Float view of a model: ``A_ub x <= b_ub``, ``A_eq x = b_eq``, variable bounds."""

    def __init__(self, model):
        n = model.num_vars
        self.n = n
        self.c = np.zeros(n)
        for j, v in model.objective.items():
            self.c[j] = float(v)
        self.lb = np.array([float(v.lb) for v in model.variables])
        self.ub = np.array([float(v.ub) for v in model.variables])
        ub_rows, eq_rows = [], []
        for r in model.rows:
            coefs = [(j, float(c)) for j, c in r.coefs]
            rhs = float(r.rhs)
            if r.sense == "=":
                eq_rows.append((coefs, rhs))
            elif r.sense == "<=":
                ub_rows.append((coefs, rhs))
            else:
                ub_rows.append(([(j, -c) for j, c in coefs], -rhs))
        self.A_ub, self.b_ub = _csr(ub_rows, n)
        self.A_eq, self.b_eq = _csr(eq_rows, n)
        self._dense = None

    @property
    def dense_cells(self) -> int:
        m = self.A_ub.shape[0] + self.A_eq.shape[0]
        return m * (self.n + self.A_ub.shape[0] + m)

    def standard_form(self):
        """Equality form with one slack per inequality row."""
        if self._dense is None:
            k = self.A_ub.shape[0]
            top = np.hstack([self.A_ub.toarray(), np.eye(k)])
            bottom = np.hstack([self.A_eq.toarray(), np.zeros((self.A_eq.shape[0], k))])
            A = np.vstack([top, bottom])
            b = np.concatenate([self.b_ub, self.b_eq])
            c = np.concatenate([self.c, np.zeros(k)])
            self._dense = (A, b, c, k)
        return self._dense

    def solve(self, lb, ub, engine: str = "auto") -> LpResult:
        if engine == "auto":
            engine = "simplex" if self.dense_cells <= DENSE_LIMIT else "highs"
        if engine == "highs":
            return self._solve_highs(lb, ub)
        if engine in ("simplex", "python", "compiled"):
            A, b, c, k = self.standard_form()
            res = solve_dense(
                c, A, b,
                np.concatenate([lb, np.zeros(k)]),
                np.concatenate([ub, np.full(k, np.inf)]),
                kernel="auto" if engine == "simplex" else engine,
            )
            if res.x is not None:
                res.x = res.x[: self.n]
            return res
        raise ValueError(f"unknown LP engine {engine!r}")

    def _solve_highs(self, lb, ub) -> LpResult:
        res = linprog(
            self.c,
            A_ub=self.A_ub if self.A_ub.shape[0] else None,
            b_ub=self.b_ub if self.A_ub.shape[0] else None,
            A_eq=self.A_eq if self.A_eq.shape[0] else None,
            b_eq=self.b_eq if self.A_eq.shape[0] else None,
            bounds=np.column_stack([lb, ub]),
            method="highs",
        )
        if res.status == 0:
            return LpResult(OPTIMAL, res.x, float(res.fun), int(res.nit))
        if res.status == 2:
            return LpResult(INFEASIBLE)
        if res.status == 3:
            return LpResult(UNBOUNDED)
        return LpResult(NUMERICAL)


def _csr(rows, n):
    data, indices, indptr, rhs = [], [], [0], []
    for coefs, b in rows:
        for j, c in coefs:
            indices.append(j)
            data.append(c)
        indptr.append(len(indices))
        rhs.append(b)
    A = sparse.csr_matrix((data, indices, indptr), shape=(len(rows), n))
    return A, np.array(rhs, dtype=float)
