"""Exact MILP solving: built-in branch and bound or an external LP-file route."""

from .bb import TIME_LIMIT_ENV, BbOptions, solve_bb
from .external import solve_external, solve_lp_file
from .result import INFEASIBLE, OPTIMAL, TIME_LIMIT, SolutionError, SolveResult, SolverError
from .simplex import KERNEL
from .solution import import_solution, write_solution

__all__ = [
    "BbOptions", "solve_bb", "solve_external", "solve_lp_file", "import_solution",
    "write_solution", "SolveResult", "SolverError", "SolutionError", "OPTIMAL", "INFEASIBLE",
    "TIME_LIMIT", "TIME_LIMIT_ENV", "KERNEL",
]
