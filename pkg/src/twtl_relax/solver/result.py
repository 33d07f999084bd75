from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
TIME_LIMIT = "TimeLimit"


class SolverError(RuntimeError):
    """The LP engine failed numerically; no answer is reported."""


class SolutionError(ValueError):
    """An imported assignment is malformed or violates the model."""


@dataclass
class SolveResult:
    status: str
    values: list[Fraction] | None = None
    objective: Fraction | None = None
    nodes: int = 0
    wall_time: float = 0.0
    message: str = ""
    names: list[str] = field(default_factory=list, repr=False)

    @property
    def assignment(self) -> dict[str, Fraction]:
        if self.values is None:
            return {}
        return dict(zip(self.names, self.values))

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL
