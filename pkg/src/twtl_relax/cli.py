"""Command-line front end: ``twtl-relax <command> ...``.

Exit codes: 0 optimal / success, 1 verification failure, 2 infeasible,
3 input error, 4 time limit.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from .automata import to_dot, translate
from .bench import AXES, BenchConfig, parse_range, run_bench, to_csv
from .env import EnvError, build_ts, parse_env, to_fraction
from .milp import ModelError, build_model, export_lp, model_stats
from .planner import DecompositionError, Plan, PlanningError, build_pipeline, decompose_flows, plan, verify
from .product import product_stats, product_to_dot
from .solver import BbOptions, SolutionError, import_solution
from .solver.result import INFEASIBLE, OPTIMAL
from .twtl import TwtlSyntaxError, parse_twtl, propositions

EXIT_OK, EXIT_VERIFY, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_TIME = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors, not the infeasible exit code argparse picks."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path}: {exc.strerror}") from exc


def _spec_text(value: str) -> str:
    """A mission given inline or as a path to a file holding it."""
    if os.path.isfile(value):
        return _read(value, "spec")
    return value


def _lambda(text: str) -> Fraction:
    try:
        lam = to_fraction(text)
    except EnvError as exc:
        raise InputError(f"--lambda: {exc}") from exc
    if lam <= 0:
        raise InputError("--lambda must be positive")
    return lam


def _env(args):
    try:
        return parse_env(_read(args.env, "environment"))
    except EnvError as exc:
        raise InputError(f"{args.env}: {exc}") from exc


def _prefs(args) -> str:
    return _read(args.prefs, "preferences") if args.prefs else ""


def _pipeline(args):
    ts = _env(args)
    try:
        return build_pipeline(ts, _spec_text(args.spec), _prefs(args), args.allow_new_aps)
    except PlanningError as exc:
        if exc.stage in ("spec", "prefs"):
            where = args.prefs if exc.stage == "prefs" else "--spec"
            raise InputError(f"{where}: {exc.cause}") from exc
        raise


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _options(args) -> BbOptions:
    return BbOptions(time_limit=getattr(args, "time_limit", None))


def _dump_plan(args, p: Plan):
    _write(args.out, p.to_json() + "\n")


def cmd_plan(args) -> int:
    ts = _env(args)
    lam = _lambda(args.lam)
    try:
        outcome = plan(ts, _spec_text(args.spec), _prefs(args), lam, backend=args.solver,
                       options=_options(args), allow_new_aps=args.allow_new_aps)
    except PlanningError as exc:
        if exc.stage in ("spec", "prefs", "input"):
            raise InputError(str(exc)) from exc
        raise
    if args.dot and outcome.pipeline is not None:
        Path(f"{args.dot}.dfa.dot").write_text(to_dot(outcome.pipeline.dfa))
        Path(f"{args.dot}.product.dot").write_text(product_to_dot(outcome.pipeline.automaton))
    if args.stats and outcome.model is not None:
        stats = {"product": product_stats(outcome.pipeline.automaton), "model": model_stats(outcome.model),
                 "timings": outcome.timings, "nodes": outcome.solve.nodes if outcome.solve else 0}
        print(json.dumps(stats, indent=2, sort_keys=True), file=sys.stderr)
    if outcome.status == OPTIMAL:
        _dump_plan(args, outcome.plan)
        return EXIT_OK
    if outcome.status == INFEASIBLE:
        print(f"infeasible: {outcome.diagnosis}", file=sys.stderr)
        for hint in outcome.hints:
            print(f"  hint: {hint}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if outcome.plan is not None:
        _dump_plan(args, outcome.plan)
    print(f"time limit: {outcome.diagnosis or 'no optimality proof'}", file=sys.stderr)
    return EXIT_TIME


def cmd_translate(args) -> int:
    text = _spec_text(args.spec)
    try:
        f = parse_twtl(text)
    except TwtlSyntaxError as exc:
        raise InputError(f"--spec: {exc}") from exc
    aps = sorted(propositions(f) | set(args.aps.split(",") if args.aps else []))
    dfa = translate(f, aps)
    if args.dot:
        _write(args.dot, to_dot(dfa))
    if args.stats or not args.dot:
        stats = {"states": dfa.num_states, "edges": len(dfa.edges), "accepting": len(dfa.accepting),
                 "aps": list(dfa.aps)}
        print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_product(args) -> int:
    if args.env:
        pipe = _pipeline(args)
    else:
        # no map: the alphabet is whatever the mission and rules mention
        placeholder = build_ts([("_", [])], [], {"_": 1})
        try:
            pipe = build_pipeline(placeholder, _spec_text(args.spec), _prefs(args), allow_new_aps=True)
        except PlanningError as exc:
            if exc.stage in ("spec", "prefs"):
                raise InputError(str(exc)) from exc
            raise
    if args.dot:
        _write(args.dot, product_to_dot(pipe.automaton))
    if args.stats or not args.dot:
        stats = {"dfa_states": pipe.dfa.num_states, **product_stats(pipe.automaton)}
        print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_OK


def _model(args):
    pipe = _pipeline(args)
    try:
        return pipe, build_model(pipe.ts, pipe.automaton, _lambda(args.lam), prune=not args.no_prune)
    except ModelError as exc:
        raise InputError(str(exc)) from exc


def cmd_export_lp(args) -> int:
    _, model = _model(args)
    _write(args.out, export_lp(model))
    if args.stats:
        print(json.dumps(model_stats(model), indent=2, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_import_solution(args) -> int:
    pipe, model = _model(args)
    try:
        res = import_solution(model, _read(args.solution, "solution"))
    except SolutionError as exc:
        raise InputError(f"{args.solution}: {exc}") from exc
    try:
        p = decompose_flows(model, res.values)
    except DecompositionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    report = verify(p, pipe.ts, pipe.automaton, pipe.formula)
    _dump_plan(args, p)
    if not report.ok:
        for failure in report.failures:
            print(f"check failed: {failure}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_check(args) -> int:
    pipe = _pipeline(args)
    try:
        p = Plan.from_dict(json.loads(_read(args.plan, "plan")))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.plan}: malformed plan ({exc})") from exc
    report = verify(p, pipe.ts, pipe.automaton, pipe.formula)
    for failure in report.failures:
        print(f"FAIL {failure}")
    print(f"{report.checks - len(report.failures)}/{report.checks} checks passed")
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_bench(args) -> int:
    try:
        cfg = BenchConfig(args.axis, parse_range(args.range), reps=args.reps, seed=args.seed,
                          nodes=args.nodes, robots=args.robots, aps=args.aps, prefs=args.prefs,
                          window=args.window, time_limit=args.time_limit)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows = run_bench(cfg)
    _write(args.out, to_csv(rows))
    return EXIT_OK


def _common(p, model=False, prefs=True):
    p.add_argument("--env", required=True, help="environment JSON")
    p.add_argument("--spec", required=True, help="mission text or a file containing it")
    if prefs:
        p.add_argument("--prefs", help="rewrite rules, one per line")
    p.add_argument("--allow-new-aps", action="store_true",
                   help="let rules mention propositions absent from the map and mission")
    if model:
        p.add_argument("--lambda", dest="lam", default="0.5", help="blending weight (default 0.5)")
        p.add_argument("--no-prune", action="store_true", help="keep unreachable variables")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twtl-relax", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="synthesize a minimally relaxed team plan")
    _common(p)
    p.add_argument("--lambda", dest="lam", default="0.5")
    p.add_argument("--solver", choices=["builtin", "lpfile"], default="builtin")
    p.add_argument("--out", help="plan JSON path (default stdout)")
    p.add_argument("--dot", metavar="PREFIX", help="write PREFIX.dfa.dot and PREFIX.product.dot")
    p.add_argument("--stats", action="store_true", help="print sizes and timings to stderr")
    p.add_argument("--time-limit", type=float, help="seconds (default $TWTL_RELAX_TIME_LIMIT)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("translate", help="mission automaton as DOT and size stats")
    p.add_argument("--spec", required=True)
    p.add_argument("--aps", help="extra propositions, comma separated")
    p.add_argument("--dot", help="DOT output path ('-' for stdout)")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("product", help="relaxed automaton as DOT and size stats")
    p.add_argument("--env", help="environment JSON (adds its propositions to the alphabet)")
    p.add_argument("--spec", required=True)
    p.add_argument("--prefs")
    p.add_argument("--allow-new-aps", action="store_true")
    p.add_argument("--dot", help="DOT output path ('-' for stdout)")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("export-lp", help="write the MILP in LP format")
    _common(p, model=True)
    p.add_argument("--out", help="LP path (default stdout)")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("import-solution", help="validate an external solution and decode the plan")
    _common(p, model=True)
    p.add_argument("--solution", required=True, help="'name value' lines")
    p.add_argument("--out", help="plan JSON path (default stdout)")
    p.set_defaults(func=cmd_import_solution)

    p = sub.add_parser("check", help="verify a plan JSON against the map and mission")
    _common(p)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="seeded runtime sweep, CSV output")
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--range", required=True, help="lo:hi[:step] or a comma list")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--robots", type=int, default=2)
    p.add_argument("--aps", type=int, default=3)
    p.add_argument("--prefs", type=int, default=2)
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PlanningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
