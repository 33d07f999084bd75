"""Seeded runtime sweeps over one instance parameter at a time."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import random
import time
from dataclasses import dataclass
from fractions import Fraction

from .env import TransitionSystem, build_ts, format_fraction
from .milp import build_model
from .planner import PlanningError, build_pipeline
from .solver import BbOptions, solve_bb

log = logging.getLogger(__name__)

AXES = ("ts-size", "dfa-size", "num-prefs", "num-robots", "ap-size")
COLUMNS = ("axis", "value", "rep", "nodes", "robots", "aps", "prefs", "window",
           "build_time", "solve_time", "variables", "constraints", "status", "objective")


@dataclass
class BenchConfig:
    axis: str
    values: list[int]
    reps: int = 1
    seed: int = 0
    # baseline for the parameters that are not swept
    nodes: int = 10
    robots: int = 2
    aps: int = 3
    prefs: int = 2
    window: int = 4
    lam: Fraction = Fraction(1, 2)
    time_limit: float | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}; expected one of {', '.join(AXES)}")
        if not self.values or any(v < 1 for v in self.values):
            raise ValueError("sweep values must be positive")
        if self.reps < 1:
            raise ValueError("reps must be positive")


def parse_range(text: str) -> list[int]:
    """``10:100:10`` (inclusive), ``1:5`` or ``2,4,8``."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        lo, hi, step = parts
        if step < 1 or hi < lo:
            raise ValueError(f"bad range {text!r}")
        return list(range(lo, hi + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


def random_environment(rng: random.Random, num_nodes: int, aps: list[str], num_robots: int) -> TransitionSystem:
    """Strongly connected, out-degree 2-4, unit weights, one uniformly drawn label on most nodes.

    Every proposition labels at least one node. All robots share one start
    node, drawn before the count is used so the map ignores ``num_robots``.
    """
    names = [f"x{i}" for i in range(num_nodes)]
    order = names[:]
    rng.shuffle(order)
    edges = {(u, order[(i + 1) % num_nodes]) for i, u in enumerate(order)} if num_nodes > 1 else set()
    for u in names:
        want = min(rng.randint(2, 4), num_nodes - 1)
        have = sum(1 for s, _ in edges if s == u)
        others = [v for v in names if v != u and (u, v) not in edges]
        rng.shuffle(others)
        edges.update((u, v) for v in others[: max(0, want - have)])
    labels = [[rng.choice(aps)] if rng.random() < 0.6 else [] for _ in names]
    for ap, i in zip(aps, rng.sample(range(num_nodes), min(len(aps), num_nodes))):
        labels[i] = [ap]
    robots = {rng.choice(names): num_robots}
    return build_ts(list(zip(names, labels)), sorted(edges), robots, ap_universe=aps)


def mission_text(aps: list[str], window: int, conjunctive: bool) -> str:
    """Visit every proposition within the window.

    In order, each visit lasts two steps; the conjunctive form asks for plain
    visits so a small team can cover many propositions at once.
    """
    hold = 0 if conjunctive else 1
    parts = [f"[H^{hold} {ap}]^[0,{window}]" for ap in aps]
    return (" & " if conjunctive else " . ").join(parts)


def rule_pool(aps: list[str]) -> list[str]:
    """Every distinct substitution the generator may draw, in a fixed order.

    Single-symbol rules replace one proposition by one or two others;
    two-symbol rules replace a two-step hold of one proposition, the case the
    ordered mission exercises.
    """
    targets = [frozenset([a]) for a in aps] + [frozenset(p) for p in itertools.combinations(aps, 2)]
    fmt = lambda s: "{" + ",".join(sorted(s)) + "}"
    pool = []
    for a in aps:
        lhs = frozenset([a])
        pool += [f"{fmt(lhs)} -> {fmt(t)}" for t in targets if t != lhs]
        pool += [f"{fmt(lhs)}{fmt(lhs)} -> {fmt(t1)}{fmt(t2)}"
                 for t1 in targets for t2 in targets if (t1, t2) != (lhs, lhs)]
    return pool


def random_rules_text(rng: random.Random, aps: list[str], count: int) -> str:
    """``count`` distinct rules; a shorter list is always a prefix of a longer one."""
    pool = rule_pool(aps)
    rng.shuffle(pool)
    if count > len(pool):
        raise ValueError(f"only {len(pool)} distinct rules exist over {len(aps)} propositions")
    weights = [rng.randint(1, 5) for _ in pool]
    return "\n".join(f"{r} : {w}" for r, w in zip(pool[:count], weights))


def instance(cfg: BenchConfig, value: int, rep: int):
    """Instance for one sweep point.

    The map, its labels and the rule sequence depend only on the seed, the
    repetition and the parameters that shape them, so neighbouring sweep
    points differ in the swept parameter alone.
    """
    params = {"nodes": cfg.nodes, "robots": cfg.robots, "aps": cfg.aps,
              "prefs": cfg.prefs, "window": cfg.window}
    key = {"ts-size": "nodes", "dfa-size": "window", "num-prefs": "prefs",
           "num-robots": "robots", "ap-size": "aps"}[cfg.axis]
    params[key] = value
    aps = [f"p{i}" for i in range(params["aps"])]
    env_rng = random.Random(f"{cfg.seed}/{rep}/env/{params['nodes']}/{params['aps']}")
    ts = random_environment(env_rng, params["nodes"], aps, params["robots"])
    spec = mission_text(aps, params["window"], conjunctive=cfg.axis == "ap-size")
    rule_rng = random.Random(f"{cfg.seed}/{rep}/rules/{params['aps']}")
    rules = random_rules_text(rule_rng, aps, params["prefs"])
    return params, ts, spec, rules


def run_one(cfg: BenchConfig, value: int, rep: int) -> dict:
    params, ts, spec, rules = instance(cfg, value, rep)
    row = {"axis": cfg.axis, "value": value, "rep": rep, **params}
    t0 = time.perf_counter()
    pipe = build_pipeline(ts, spec, rules)
    model = build_model(ts, pipe.automaton, cfg.lam)
    row["build_time"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = solve_bb(model, BbOptions(time_limit=cfg.time_limit))
    row["solve_time"] = time.perf_counter() - t0
    row["variables"] = model.num_vars
    row["constraints"] = len(model.rows)
    row["status"] = res.status
    row["objective"] = format_fraction(res.objective) if res.objective is not None else ""
    return row


def run_bench(cfg: BenchConfig) -> list[dict]:
    rows = []
    for value in cfg.values:
        for rep in range(cfg.reps):
            try:
                rows.append(run_one(cfg, value, rep))
            except (PlanningError, ValueError, RuntimeError) as exc:
                log.warning("skipping %s=%s rep %s: %s", cfg.axis, value, rep, exc)
    return rows


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = dict(row)
        for k in ("build_time", "solve_time"):
            out[k] = f"{row[k]:.6f}"
        writer.writerow(out)
    return buf.getvalue()
