"""Plain-text solution files: one ``name value`` pair per line, ``#`` comments."""

from __future__ import annotations

from decimal import Decimal, InvalidOperation
from fractions import Fraction

from .result import OPTIMAL, SolutionError, SolveResult


def write_solution(model, values) -> str:
    lines = ["# variable value"]
    for v, x in zip(model.variables, values):
        lines.append(f"{v.name} {_fmt(x)}")
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def import_solution(model, text: str, tol: float = 1e-6) -> SolveResult:
    """Validate an external assignment and recompute its objective.

    Variables absent from the file are taken as 0.
    """
    index = {v.name: j for j, v in enumerate(model.variables)}
    values = [Fraction(0)] * model.num_vars
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionError(f"line {lineno}: expected 'name value'")
        name, val = parts
        if name not in index:
            raise SolutionError(f"line {lineno}: unknown variable {name!r}")
        if name in seen:
            raise SolutionError(f"line {lineno}: duplicate variable {name!r}")
        seen.add(name)
        try:
            values[index[name]] = Fraction(Decimal(val))
        except (InvalidOperation, ValueError):
            raise SolutionError(f"line {lineno}: invalid value {val!r}") from None
    tol_f = Fraction(tol)
    for j, v in enumerate(model.variables):
        x = values[j]
        if v.kind != "continuous":
            r = round(x)
            if abs(x - r) > tol_f:
                raise SolutionError(f"non-integral value {float(x)} for integer variable {v.name}")
            values[j] = Fraction(r)
        if x < v.lb - tol_f or x > v.ub + tol_f:
            raise SolutionError(f"bound violated: {v.name} = {float(x)} outside [{v.lb}, {v.ub}]")
    for r in model.rows:
        viol = r.violation(values)
        if viol > tol_f:
            raise SolutionError(f"constraint {r.name} violated by {float(viol):.6g}")
    return SolveResult(
        OPTIMAL, values, model.objective_value(values),
        names=[v.name for v in model.variables], message="imported",
    )
