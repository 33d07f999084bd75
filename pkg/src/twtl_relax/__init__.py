"""Minimally relaxed multi-robot planning for time-window temporal logic missions.

The pipeline parses a mission and weighted rewrite rules, builds the relaxed
specification automaton, encodes team motion over it as a flow MILP, solves
it exactly and decodes per-robot trajectories.
"""

from .automata import SpecDfa, translate
from .env import EnvError, TransitionSystem, build_ts, parse_env
from .milp import MilpModel, build_model, export_lp
from .planner import Plan, PlanningError, brute_force_plan, decompose_flows, plan, verify
from .preferences import RewriteRule, build_wfse, parse_rules, transform_cost
from .product import RelaxedAutomaton, accepts_relaxed, construct_product, validate_dag
from .solver import BbOptions, import_solution, solve_bb, solve_external
from .twtl import parse_twtl, satisfies

__version__ = "0.1.0"

__all__ = [
    "SpecDfa", "translate", "EnvError", "TransitionSystem", "build_ts", "parse_env",
    "MilpModel", "build_model", "export_lp", "Plan", "PlanningError", "brute_force_plan",
    "decompose_flows", "plan", "verify", "RewriteRule", "build_wfse", "parse_rules",
    "transform_cost", "RelaxedAutomaton", "accepts_relaxed", "construct_product",
    "validate_dag", "BbOptions", "import_solution", "solve_bb", "solve_external",
    "parse_twtl", "satisfies",
]
