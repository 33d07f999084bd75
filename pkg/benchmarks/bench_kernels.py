"""Compare the compiled and numpy simplex kernels on the same LPs.

Usage: python benchmarks/bench_kernels.py [--count 40] [--seed 0]

Two workloads: random bounded LPs of a few sizes, and the root relaxations of
seeded planning models. Every LP is solved by both kernels; objectives must
agree before timings are reported.
"""

import argparse
import time

import numpy as np

from twtl_relax.generators import tiny_instance
from twtl_relax.milp import build_model
from twtl_relax.planner import pipeline_from
from twtl_relax.solver.lp import Relaxation
from twtl_relax.solver.simplex import KERNEL, solve_dense


def random_lp(rng: np.random.Generator, m: int, n: int):
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x0 = rng.uniform(0, 2, size=n)
    b = A @ x0
    c = rng.integers(-5, 6, size=n).astype(float)
    return c, A, b, np.zeros(n), np.full(n, 3.0)


def model_lps(count: int, seed: int):
    out = []
    k = seed
    while len(out) < count:
        ts, f, rules, lam = tiny_instance(k)
        k += 1
        pipe = pipeline_from(ts, f, rules)
        if not pipe.automaton.accepting:
            continue
        relax = Relaxation(build_model(ts, pipe.automaton, lam))
        A, b, c, slack = relax.standard_form()
        lb = np.concatenate([relax.lb, np.zeros(slack)])
        ub = np.concatenate([relax.ub, np.full(slack, np.inf)])
        out.append((c, A, b, lb, ub))
    return out


def timed(lps, kernel):
    objs = []
    start = time.perf_counter()
    for c, A, b, lb, ub in lps:
        res = solve_dense(c, A, b, lb, ub, kernel=kernel)
        objs.append(res.objective if res.objective is not None else res.status)
    return time.perf_counter() - start, objs


def same(a, b):
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return abs(a - b) <= 1e-6 * max(1.0, abs(a))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if KERNEL != "compiled":
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(args.seed)
    workloads = {
        f"random {m}x{n}": [random_lp(rng, m, n) for _ in range(args.count)]
        for m, n in ((10, 20), (40, 80), (120, 240))
    }
    workloads["planning roots"] = model_lps(args.count, args.seed)
    print(f"{'workload':<18} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for name, lps in workloads.items():
        t_py, o_py = timed(lps, "python")
        t_c, o_c = timed(lps, "compiled")
        bad = sum(not same(a, b) for a, b in zip(o_py, o_c))
        if bad:
            raise SystemExit(f"{name}: kernels disagree on {bad} LPs")
        print(f"{name:<18} {t_py:>10.3f} {t_c:>11.3f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
