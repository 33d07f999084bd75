"""Depth-first branch and bound over the LP relaxation."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lp import Relaxation
from .result import INFEASIBLE, OPTIMAL, TIME_LIMIT, SolveResult, SolverError
from .simplex import INFEASIBLE as LP_INFEASIBLE
from .simplex import OPTIMAL as LP_OPTIMAL

TIME_LIMIT_ENV = "TWTL_RELAX_TIME_LIMIT"


@dataclass
class BbOptions:
    time_limit: float | None = None  # seconds; falls back to $TWTL_RELAX_TIME_LIMIT
    tol: float = 1e-6
    node_limit: int | None = None
    lp_engine: str = "auto"  # auto | simplex | python | compiled | highs

    def effective_time_limit(self) -> float | None:
        if self.time_limit is not None:
            return self.time_limit
        raw = os.environ.get(TIME_LIMIT_ENV)
        return float(raw) if raw else None


def _round_values(model, x) -> list[Fraction]:
    out = []
    for v, val in zip(model.variables, x):
        if v.kind == "continuous":
            out.append(Fraction(float(val)).limit_denominator(1_000_000))
        else:
            out.append(Fraction(int(round(val))))
    return out


def _objective_step(model) -> Fraction | None:
    """Spacing of attainable objective values when every costed variable is integral."""
    step = None
    for j, c in model.objective.items():
        if c == 0:
            continue
        if model.variables[j].kind == "continuous":
            return None
        c = abs(Fraction(c))
        step = c if step is None else Fraction(
            math.gcd(step.numerator * c.denominator, c.numerator * step.denominator),
            step.denominator * c.denominator,
        )
    return step


def solve_bb(model, options: BbOptions | None = None) -> SolveResult:
    """Exact optimum of the model; the incumbent is re-checked in rational arithmetic."""
    opts = options or BbOptions()
    start = time.perf_counter()
    limit = opts.effective_time_limit()
    names = [v.name for v in model.variables]
    if not model.variables:
        return SolveResult(INFEASIBLE, names=names, message="empty model")
    relax = Relaxation(model)
    binaries = np.array([j for j, v in enumerate(model.variables) if v.kind == "binary"], dtype=int)
    integers = np.array([j for j, v in enumerate(model.variables) if v.kind == "integer"], dtype=int)

    def lp(changes):
        lb, ub = relax.lb.copy(), relax.ub.copy()
        for j, lo, hi in changes:
            lb[j], ub[j] = lo, hi
        res = relax.solve(lb, ub, opts.lp_engine)
        if res.status not in (LP_OPTIMAL, LP_INFEASIBLE):
            raise SolverError(f"LP relaxation failed: {res.status}")
        return res

    def branch_var(x):
        for group in (binaries, integers):
            if group.size == 0:
                continue
            frac = np.abs(x[group] - np.round(x[group]))
            k = int(np.argmax(frac))
            if frac[k] > opts.tol:
                return int(group[k])
        return None

    step = _objective_step(model)

    def dominated(bound: float) -> bool:
        """Can no point below this LP bound beat the incumbent?"""
        if best is None:
            return False
        if step is not None:
            # next attainable value at or above the bound
            lifted = math.ceil(Fraction(bound - 1e-7) / step) * step
            return lifted >= best
        return bound >= float(best) - 1e-9

    best: Fraction | None = None
    best_values: list[Fraction] | None = None
    nodes = 0
    rejected = 0
    root = lp([])
    if root.status == LP_INFEASIBLE:
        return SolveResult(INFEASIBLE, names=names, nodes=1, wall_time=time.perf_counter() - start)
    stack = [(root.objective, [], root.x)]
    status = OPTIMAL
    message = ""
    while stack:
        if limit is not None and time.perf_counter() - start > limit:
            status, message = TIME_LIMIT, f"time limit of {limit:g}s reached"
            break
        if opts.node_limit is not None and nodes >= opts.node_limit:
            status, message = TIME_LIMIT, f"node limit of {opts.node_limit} reached"
            break
        bound, changes, x = stack.pop()
        nodes += 1
        if dominated(bound):
            continue
        j = branch_var(x)
        if j is None:
            values = model.repair(_round_values(model, x))
            if model.violations(values):
                rejected += 1
                continue
            obj = model.objective_value(values)
            if best is None or obj < best:
                best, best_values = obj, values
            continue
        floor = math.floor(x[j])
        children = []
        for lo, hi in ((floor + 1, relax.ub[j]), (relax.lb[j], floor)):
            if lo > hi:
                continue
            res = lp(changes + [(j, lo, hi)])
            if res.status != LP_OPTIMAL:
                continue
            if dominated(res.objective):
                continue
            children.append((res.objective, changes + [(j, lo, hi)], res.x))
        # push the worse child first so the better one is explored next
        children.sort(key=lambda ch: -ch[0])
        stack.extend(children)
    wall = time.perf_counter() - start
    if best_values is None:
        if status == TIME_LIMIT:
            return SolveResult(TIME_LIMIT, names=names, nodes=nodes, wall_time=wall, message=message)
        if rejected:
            raise SolverError(f"{rejected} integral LP points failed exact verification")
        return SolveResult(INFEASIBLE, names=names, nodes=nodes, wall_time=wall)
    return SolveResult(status, best_values, best, nodes, wall, message, names)
