"""End-to-end synthesis: mission + preferences + map -> verified team plan.

Also hosts the exhaustive reference planner used to cross-check the MILP on
small instances.
"""

from __future__ import annotations

import heapq
import itertools
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

from .automata import SpecDfa, mask_names, translate
from .env import EnvError, TransitionSystem, format_fraction, to_fraction
from .milp import VIRTUAL, MilpModel, ModelError, build_model, model_stats
from .preferences import IDENTITY, RewriteRule, RuleError, build_wfse, parse_rules, rule_propositions
from .product import RelaxedAutomaton, accepts_relaxed, construct_product, validate_dag
from .solver import OPTIMAL, TIME_LIMIT, BbOptions, SolveResult, solve_bb, solve_external
from .twtl import Formula, TwtlSyntaxError, parse_twtl, propositions, satisfies

__all__ = [
    "Plan", "PlanOutcome", "PlanningError", "DecompositionError", "VerifyReport", "Pipeline",
    "build_pipeline", "plan", "decompose_flows", "verify", "brute_force_plan", "OracleTooLarge",
]

INFEASIBLE_DIAGNOSIS = "no accepting product path realizable on this map within the horizon"


class PlanningError(Exception):
    def __init__(self, stage: str, cause: Exception | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class DecompositionError(RuntimeError):
    pass


class OracleTooLarge(ValueError):
    pass


@dataclass
class Plan:
    trajectories: dict[str, list[str]]
    product_path: list[int]
    output_word: list[list[str]]
    rewrites: list[dict]
    control: Fraction
    revision: Fraction
    total: Fraction
    lam: Fraction
    product_edges: list[int] = field(default_factory=list)
    spec_word: list[list[str]] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(next(iter(self.trajectories.values()))) - 1

    def to_dict(self) -> dict:
        return {
            "trajectories": self.trajectories,
            "product_path": self.product_path,
            "product_edges": self.product_edges,
            "output_word": self.output_word,
            "spec_word": self.spec_word,
            "rewrites": self.rewrites,
            "costs": {
                "control": format_fraction(self.control),
                "revision": format_fraction(self.revision),
                "total": format_fraction(self.total),
                "lambda": format_fraction(self.lam),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "Plan":
        costs = data["costs"]
        return cls(
            trajectories={k: list(v) for k, v in data["trajectories"].items()},
            product_path=[int(q) for q in data["product_path"]],
            output_word=[list(s) for s in data["output_word"]],
            rewrites=list(data.get("rewrites", [])),
            control=to_fraction(costs["control"]),
            revision=to_fraction(costs["revision"]),
            total=to_fraction(costs["total"]),
            lam=to_fraction(costs["lambda"]),
            product_edges=[int(i) for i in data.get("product_edges", [])],
            spec_word=[list(s) for s in data.get("spec_word", [])],
        )


@dataclass
class Pipeline:
    ts: TransitionSystem
    formula: Formula
    rules: list[RewriteRule]
    aps: tuple[str, ...]
    dfa: SpecDfa
    automaton: RelaxedAutomaton


@dataclass
class PlanOutcome:
    status: str  # Optimal | Infeasible | TimeLimit
    plan: Plan | None = None
    diagnosis: str = ""
    hints: list[str] = field(default_factory=list)
    pipeline: Pipeline | None = None
    model: MilpModel | None = None
    solve: SolveResult | None = None
    timings: dict[str, float] = field(default_factory=dict)


def build_pipeline(ts: TransitionSystem, spec_text: str, rules_text: str = "",
                   allow_new_aps: bool = False) -> Pipeline:
    """Parse, translate and build the relaxed automaton, attributing errors to a stage."""
    try:
        formula = parse_twtl(spec_text)
    except TwtlSyntaxError as exc:
        raise PlanningError("spec", exc) from exc
    try:
        rules = parse_rules(rules_text, set(ts.ap_universe) | propositions(formula), allow_new_aps)
    except RuleError as exc:
        raise PlanningError("prefs", exc) from exc
    return pipeline_from(ts, formula, rules)


def pipeline_from(ts: TransitionSystem, formula: Formula, rules: Sequence[RewriteRule]) -> Pipeline:
    aps = tuple(sorted(set(ts.ap_universe) | propositions(formula) | rule_propositions(rules)))
    try:
        dfa = translate(formula, aps)
        A = construct_product(build_wfse(rules, aps), dfa)
        validate_dag(A)
    except ValueError as exc:
        raise PlanningError("automaton", exc) from exc
    return Pipeline(ts, formula, list(rules), aps, dfa, A)


def _hints(pipe: Pipeline) -> list[str]:
    present = set().union(*pipe.ts.labels) if pipe.ts.labels else set()
    needed = set()
    for e in pipe.automaton.edges:
        for t in e.guard.positive_terms:
            needed |= set(mask_names(t, pipe.aps))
    return [f"no node is labeled {ap}" for ap in sorted(needed - present)]


def plan(ts: TransitionSystem, spec_text: str, rules_text: str = "", lam=Fraction(1, 2),
         backend: str = "builtin", options: BbOptions | None = None,
         allow_new_aps: bool = False, prune: bool = True) -> PlanOutcome:
    lam = to_fraction(lam)
    if lam <= 0:
        raise PlanningError("input", "lambda must be positive")
    timings = {}
    t0 = time.perf_counter()
    pipe = build_pipeline(ts, spec_text, rules_text, allow_new_aps)
    timings["automaton"] = time.perf_counter() - t0
    if not pipe.automaton.accepting:
        return PlanOutcome("Infeasible", diagnosis="the relaxed automaton has no accepting state",
                           hints=_hints(pipe), pipeline=pipe, timings=timings)
    return plan_pipeline(pipe, lam, backend, options, prune, timings)


def plan_pipeline(pipe: Pipeline, lam, backend: str = "builtin", options: BbOptions | None = None,
                  prune: bool = True, timings: dict | None = None) -> PlanOutcome:
    timings = dict(timings or {})
    lam = to_fraction(lam)
    t0 = time.perf_counter()
    try:
        model = build_model(pipe.ts, pipe.automaton, lam, prune=prune)
    except ModelError as exc:
        raise PlanningError("model", exc) from exc
    timings["build"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if backend == "builtin":
        result = solve_bb(model, options)
    elif backend == "lpfile":
        limit = (options or BbOptions()).effective_time_limit()
        result = solve_external(model, limit)
    else:
        raise PlanningError("input", f"unknown solver backend {backend!r}")
    timings["solve"] = time.perf_counter() - t0
    outcome = PlanOutcome(result.status, pipeline=pipe, model=model, solve=result, timings=timings)
    if result.status != OPTIMAL:
        if result.status != TIME_LIMIT or result.values is None:
            if result.status != TIME_LIMIT:
                outcome.diagnosis = INFEASIBLE_DIAGNOSIS
                outcome.hints = _hints(pipe)
            else:
                outcome.diagnosis = result.message
            return outcome
    try:
        p = decompose_flows(model, result.values)
    except DecompositionError as exc:
        raise PlanningError("decompose", exc) from exc
    report = verify(p, pipe.ts, pipe.automaton, pipe.formula)
    if not report.ok:
        raise PlanningError("verify", "; ".join(report.failures))
    if p.total != result.objective:
        raise PlanningError("verify", f"plan cost {p.total} differs from solver objective {result.objective}")
    outcome.plan = p
    return outcome


# -- flow decomposition ------------------------------------------------------------


def decompose_flows(model: MilpModel, values: Sequence[Fraction]) -> Plan:
    """Split robot counts into per-robot paths, robots and edges taken in id order."""
    ts, A = model.ts, model.automaton
    masks = ts.masks_over(A.aps)
    N = model.num_robots
    flows: dict[int, dict[tuple[int, int], int]] = {}
    for j, v in enumerate(model.variables):
        if v.family == "zE" and values[j]:
            u, x, b = v.key
            flows.setdefault(b, {})[(u, x)] = int(values[j])
    out_blocks: dict[int, list[int]] = {}
    for k, b in enumerate(model.blocks):
        out_blocks.setdefault(b.src, []).append(k)
    block_at = {b.index: b for b in model.blocks}

    positions = [[x] for x in range(len(ts.nodes)) for _ in range(ts.initial_counts[x])]
    q = A.initial
    path = [q]
    chosen = []
    step = 0
    while q not in A.accepting:
        used = [b.index for b in (model.blocks[k] for k in out_blocks.get(q, [])) if b.index in flows]
        if len(used) != 1:
            raise DecompositionError(f"state {q}: expected one block carrying flow, found {len(used)}")
        b = block_at[used[0]]
        remaining = dict(flows[b.index])
        if step == 0:
            for x in range(len(ts.nodes)):
                if remaining.pop((VIRTUAL, x), 0) != ts.initial_counts[x]:
                    raise DecompositionError(f"initial flow at {ts.nodes[x]} differs from the placement")
        else:
            for traj in positions:
                u = traj[-1]
                # lower-id robots take moving edges first, then stays; targets by id
                options = sorted((v for (s, v), c in remaining.items() if s == u and c > 0),
                                 key=lambda v: (v == u, v))
                if not options:
                    raise DecompositionError(f"step {step}: no outgoing flow left at {ts.nodes[u]}")
                v = options[0]
                remaining[(u, v)] -= 1
                traj.append(v)
        if any(remaining.values()):
            raise DecompositionError(f"step {step}: flow does not match robot positions")
        chosen.append(b)
        q = b.dst
        path.append(q)
        step += 1
        if step > len(A.states) + 1:
            raise DecompositionError("product path does not terminate")

    word_masks = []
    for k in range(step):
        m = 0
        for traj in positions:
            m |= masks[traj[k]]
        word_masks.append(m)
    edges, rewrites, spec_word = [], [], []
    for k, b in enumerate(chosen):
        sigma = word_masks[k]
        hit = [i for i in b.edges if A.edges[i].guard.sat_upward(sigma)]
        if not hit:
            raise DecompositionError(f"step {k}: team output does not enable the selected block")
        i = hit[0]
        e = A.edges[i]
        edges.append(i)
        if e.kind == IDENTITY:
            spec_word.append(sigma)
        else:
            term = next(t for t in e.guard.positive_terms if t & ~sigma == 0)
            spec_word.append(sigma | e.spec_symbol(term))
            parts = e.parts or ((e.rule_id, e.rule_exec, e.rule_spec, e.weight),)
            for rule_id, rule_exec, rule_spec, weight in parts:
                rewrites.append({
                    "step": k,
                    "rule": rule_id,
                    "exec": list(mask_names(rule_exec, A.aps)),
                    "spec": list(mask_names(rule_spec, A.aps)),
                    "weight": format_fraction(weight),
                })
    control = sum(
        (ts.weight[(traj[k], traj[k + 1])] for traj in positions for k in range(len(traj) - 1)),
        Fraction(0),
    )
    revision = N * sum((b.weight for b in chosen), Fraction(0))
    return Plan(
        trajectories={f"r{r + 1}": [ts.nodes[x] for x in traj] for r, traj in enumerate(positions)},
        product_path=path,
        output_word=[list(mask_names(m, A.aps)) for m in word_masks],
        rewrites=rewrites,
        control=control,
        revision=revision,
        total=control + model.lam * revision,
        lam=model.lam,
        product_edges=edges,
        spec_word=[list(mask_names(m, A.aps)) for m in spec_word],
    )


# -- verification -------------------------------------------------------------------


@dataclass
class VerifyReport:
    failures: list[str] = field(default_factory=list)
    checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, cond: bool, message: str) -> bool:
        self.checks += 1
        if not cond:
            self.failures.append(message)
        return cond


def verify(p: Plan, ts: TransitionSystem, A: RelaxedAutomaton, formula: Formula | None = None) -> VerifyReport:
    """Itemized audit of a plan; never modifies it."""
    rep = VerifyReport()
    trajs = list(p.trajectories.values())
    if not rep.check(len(trajs) == ts.num_robots, f"expected {ts.num_robots} trajectories, found {len(trajs)}"):
        return rep
    lengths = {len(t) for t in trajs}
    if not rep.check(len(lengths) == 1, "trajectories have different lengths"):
        return rep
    T = lengths.pop() - 1
    unknown = {x for t in trajs for x in t if x not in ts.node_index}
    if not rep.check(not unknown, f"unknown nodes {sorted(unknown)}"):
        return rep
    idx = [[ts.node_index[x] for x in t] for t in trajs]
    start = [0] * len(ts.nodes)
    for t in idx:
        start[t[0]] += 1
    rep.check(tuple(start) == ts.initial_counts, "step-0 positions differ from the initial placement")
    control = Fraction(0)
    for r, t in zip(p.trajectories, idx):
        for k in range(T):
            w = ts.weight.get((t[k], t[k + 1]))
            if rep.check(w is not None, f"{r} step {k + 1}: edge not in the transition system "
                                       f"({ts.nodes[t[k]]}->{ts.nodes[t[k + 1]]})"):
                control += w
    masks = ts.masks_over(A.aps)
    word = []
    for k in range(T + 1):
        m = 0
        for t in idx:
            m |= masks[t[k]]
        word.append(m)
    rep.check([sorted(s) for s in p.output_word] == [sorted(mask_names(m, A.aps)) for m in word],
              "output word does not match the trajectories")
    path = p.product_path
    path_weight = Fraction(0)
    if rep.check(len(path) == T + 2, f"product path has {len(path)} states, expected {T + 2}"):
        rep.check(path[0] == A.initial, "product path does not start at the initial state")
        rep.check(path[-1] in A.accepting, "product path does not end in an accepting state")
        for k in range(T + 1):
            q, q2 = path[k], path[k + 1]
            ws = [A.edges[i].weight for i in A.out[q] if 0 <= q < A.num_states
                  and A.edges[i].dst == q2 and A.edges[i].guard.sat_upward(word[k])]
            if rep.check(bool(ws), f"step {k}: no enabled product edge {q}->{q2}"):
                path_weight += min(ws)
    N = ts.num_robots
    rep.check(control == p.control, f"control cost mismatch: plan {p.control}, recomputed {control}")
    rep.check(N * path_weight == p.revision,
              f"revision cost mismatch: plan {p.revision}, recomputed {N * path_weight}")
    rep.check(p.total == p.control + p.lam * p.revision, "total cost mismatch: total != control + lambda*revision")
    rewrite_weight = sum((to_fraction(r["weight"]) for r in p.rewrites), Fraction(0))
    rep.check(N * rewrite_weight == p.revision, "rewrite weights do not add up to the revision cost")
    best = accepts_relaxed(A, word)
    if rep.check(best is not None, "the relaxed automaton rejects the output word"):
        rep.check(best[0] >= path_weight, f"a cheaper relaxation of weight {best[0]} exists")
    if formula is not None and p.spec_word:
        rep.check(satisfies([frozenset(s) for s in p.spec_word], formula),
                  "the reconstructed specification word does not satisfy the mission")
    return rep


# -- exhaustive reference -------------------------------------------------------------


def _moves(ts: TransitionSystem, placement: tuple[int, ...]) -> dict[tuple[int, ...], Fraction]:
    """Every successor placement with its cheapest total move cost."""
    per_node = []
    for x, c in enumerate(placement):
        if c:
            per_node.append([
                (dests, sum((ts.weight[(x, v)] for v in dests), Fraction(0)))
                for dests in itertools.combinations_with_replacement(ts.out_edges[x], c)
            ])
    best: dict[tuple[int, ...], Fraction] = {}
    for combo in itertools.product(*per_node):
        counts = [0] * len(placement)
        cost = Fraction(0)
        for dests, w in combo:
            cost += w
            for v in dests:
                counts[v] += 1
        key = tuple(counts)
        if key not in best or cost < best[key]:
            best[key] = cost
    return best


def brute_force_plan(ts: TransitionSystem, formula: Formula | str, rules: Sequence[RewriteRule] | str = (),
                     lam=Fraction(1, 2), max_states: int = 500_000) -> Fraction | None:
    """Cheapest objective by search over (team placement, product state); None if infeasible."""
    if isinstance(formula, str):
        formula = parse_twtl(formula)
    if isinstance(rules, str):
        rules = parse_rules(rules)
    lam = to_fraction(lam)
    pipe = pipeline_from(ts, formula, rules)
    A = pipe.automaton
    N = ts.num_robots
    size = comb(len(ts.nodes) + N - 1, N) * A.num_states
    if size > max_states:
        raise OracleTooLarge(f"{size} search states exceed the cap of {max_states}")
    masks = ts.masks_over(A.aps)

    def output(placement):
        m = 0
        for x, c in enumerate(placement):
            if c:
                m |= masks[x]
        return m

    start = tuple(ts.initial_counts)
    heap: list = []
    dist: dict = {}
    counter = itertools.count()

    def push(cost, placement, q):
        key = (placement, q)
        if key not in dist or cost < dist[key]:
            dist[key] = cost
            heapq.heappush(heap, (cost, next(counter), placement, q))

    sigma0 = output(start)
    for i in A.out[A.initial]:
        e = A.edges[i]
        if e.guard.sat_upward(sigma0):
            push(lam * N * e.weight, start, e.dst)
    move_cache: dict = {}
    while heap:
        cost, _, placement, q = heapq.heappop(heap)
        if cost > dist[(placement, q)]:
            continue
        if q in A.accepting:
            return cost
        if placement not in move_cache:
            move_cache[placement] = _moves(ts, placement)
        for nxt, ctrl in move_cache[placement].items():
            sigma = output(nxt)
            for i in A.out[q]:
                e = A.edges[i]
                if e.guard.sat_upward(sigma):
                    push(cost + ctrl + lam * N * e.weight, nxt, e.dst)
    return None
