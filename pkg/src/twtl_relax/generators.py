"""Seeded random formulas, maps and rule sets for tests and benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .env import TransitionSystem, build_ts
from .preferences import RewriteRule
from .twtl import And, Concat, Formula, Hold, Or, Within, norm


def random_formula(rng: random.Random, aps: Sequence[str], depth: int = 3, budget: int = 6,
                   true_prob: float = 0.05) -> Formula:
    """Formula with nesting depth <= ``depth`` and norm <= ``budget``."""
    if depth == 0 or rng.random() < 0.3:
        prop = None if rng.random() < true_prob else rng.choice(list(aps))
        return Hold(rng.randint(0, min(budget, 2)), prop)
    kind = rng.choice(["and", "or", "concat", "within"])
    if kind == "concat" and budget >= 1:
        left = rng.randint(0, budget - 1)
        return Concat(random_formula(rng, aps, depth - 1, left, true_prob),
                      random_formula(rng, aps, depth - 1, budget - 1 - left, true_prob))
    if kind == "within":
        inner = random_formula(rng, aps, depth - 1, budget, true_prob)
        n = norm(inner)
        b = rng.randint(n, budget)
        a = rng.randint(0, b - n)
        return Within(inner, a, b)
    op = And if kind == "and" else Or
    return op(random_formula(rng, aps, depth - 1, budget, true_prob),
              random_formula(rng, aps, depth - 1, budget, true_prob))


def random_symbol(rng: random.Random, aps: Sequence[str], min_size: int = 0) -> frozenset[str]:
    while True:
        s = frozenset(a for a in aps if rng.random() < 0.4)
        if len(s) >= min_size:
            return s


def random_rules(rng: random.Random, aps: Sequence[str], count: int, max_len: int = 2,
                 max_weight: int = 5) -> list[RewriteRule]:
    rules = []
    for k in range(count):
        length = rng.randint(1, max_len)
        lhs = tuple(random_symbol(rng, aps, 1) for _ in range(length))
        rhs = tuple(random_symbol(rng, aps) for _ in range(length))
        rules.append(RewriteRule(lhs, rhs, Fraction(rng.randint(1, max_weight)), k + 1))
    return rules


def random_ts(rng: random.Random, num_nodes: int, aps: Sequence[str], num_robots: int,
              out_degree: tuple[int, int] = (2, 4), label_prob: float = 0.35,
              max_weight: int = 1) -> TransitionSystem:
    """Strongly connected map: a random Hamiltonian cycle plus extra random edges.

    Robots start on one or two random nodes.
    """
    names = [f"x{i}" for i in range(num_nodes)]
    order = names[:]
    rng.shuffle(order)
    edges: dict[tuple[str, str], int] = {}
    for i, u in enumerate(order):
        if num_nodes > 1:
            edges[(u, order[(i + 1) % num_nodes])] = rng.randint(1, max_weight)
    for u in names:
        want = min(rng.randint(*out_degree), num_nodes - 1)
        have = sum(1 for (s, _) in edges if s == u)
        others = [v for v in names if v != u and (u, v) not in edges]
        rng.shuffle(others)
        for v in others[: max(0, want - have)]:
            edges[(u, v)] = rng.randint(1, max_weight)
    labels = []
    for _ in names:
        lab = [a for a in aps if rng.random() < label_prob]
        labels.append(lab)
    starts = rng.sample(names, min(2, num_nodes))
    robots: dict[str, int] = {}
    for r in range(num_robots):
        robots[starts[r % len(starts)]] = robots.get(starts[r % len(starts)], 0) + 1
    return build_ts(list(zip(names, labels)), [(u, v, w) for (u, v), w in edges.items()], robots,
                    ap_universe=aps)


def tiny_instance(seed: int):
    """Map, formula, rules and lambda small enough for the exhaustive planner."""
    rng = random.Random(seed)
    aps = ["A", "B", "C"][: rng.randint(1, 3)]
    ts = random_ts(rng, rng.randint(2, 6), aps, rng.randint(1, 3), out_degree=(1, 3),
                   label_prob=0.3, max_weight=3)
    formula = random_formula(rng, aps, depth=rng.randint(1, 3), budget=rng.randint(1, 5))
    n = norm(formula)
    if n < 6 and rng.random() < 0.6:
        # slack window: room to travel before the task starts
        formula = Within(formula, 0, rng.randint(n + 1, 6))
    rules = random_rules(rng, aps, rng.randint(0, 3), max_len=2, max_weight=4)
    lam = Fraction(rng.choice([1, 1, 2, 3]), rng.choice([1, 2, 4]))
    return ts, formula, rules, lam
