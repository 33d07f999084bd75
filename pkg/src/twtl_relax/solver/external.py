"""Solve through the exported LP file with HiGHS, then re-import and validate."""

from __future__ import annotations

import os
import tempfile
import time

from ..milp import export_lp
from .result import INFEASIBLE, TIME_LIMIT, SolveResult, SolverError
from .solution import import_solution


def solve_lp_file(path: str, time_limit: float | None = None) -> tuple[str, str | None]:
    """Run HiGHS on an LP file; returns (status, solution text or None)."""
    try:
        import highspy
    except ImportError as exc:
        raise SolverError("the lpfile route needs the 'highspy' package") from exc
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if time_limit is not None:
        h.setOptionValue("time_limit", float(time_limit))
    if h.readModel(path) != highspy.HighsStatus.kOk:
        raise SolverError(f"HiGHS could not read {path}")
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    if status == ms.kOptimal:
        names = h.getLp().col_names_
        values = h.getSolution().col_value
        lines = ["# solved by HiGHS"] + [f"{n} {v!r}" for n, v in zip(names, values)]
        return "Optimal", "\n".join(lines) + "\n"
    if status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
        return INFEASIBLE, None
    if status == ms.kTimeLimit:
        return TIME_LIMIT, None
    raise SolverError(f"HiGHS finished with status {h.modelStatusToString(status)}")


def solve_external(model, time_limit: float | None = None, workdir: str | None = None) -> SolveResult:
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        path = os.path.join(tmp, "model.lp")
        with open(path, "w") as fh:
            fh.write(export_lp(model))
        status, text = solve_lp_file(path, time_limit)
    names = [v.name for v in model.variables]
    if text is None:
        return SolveResult(status, names=names, wall_time=time.perf_counter() - start)
    res = import_solution(model, text)
    res.wall_time = time.perf_counter() - start
    res.message = "HiGHS via LP file"
    return res
