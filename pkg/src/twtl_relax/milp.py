"""Flow-based mixed-integer model over the environment x relaxed-automaton product.

Robots are counted, not individually tracked. ``zE`` variables count robots
taking a TS edge while the team takes a product block, ``zS`` count robots
sitting at a node when the team is in a product state, and the ``xi``
indicators tie the chosen product block to the propositions the team covers.

A block (see :class:`~twtl_relax.product.Block`) groups parallel product edges
of equal weight, and every block has its own selection binary. Giving parallel
edges of different weight separate binaries keeps the charged weight honest:
flow may only ride a block whose own terms are covered.
"""

from __future__ import annotations

import json
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable

from .env import TransitionSystem
from .product import Block, RelaxedAutomaton, validate_dag

__all__ = [
    "Variable", "Row", "MilpModel", "ModelError", "build_model", "prune_reachable",
    "export_lp", "model_stats", "VIRTUAL", "FAMILIES",
]

VIRTUAL = -1  # the source node feeding the initial placement

INTEGER = "integer"
BINARY = "binary"
CONTINUOUS = "continuous"

# constraint groups, in the order rows are emitted
FAMILIES = ("placement", "conservation", "occupancy", "one_block", "block_flow",
            "term_cover", "prop_cover", "presence", "acceptance")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: Fraction
    ub: Fraction
    family: str  # zE, zS, xiE, xiT, xiA
    key: tuple


@dataclass(frozen=True)
class Row:
    name: str
    family: str  # constraint group, see FAMILIES
    coefs: tuple[tuple[int, Fraction], ...]
    sense: str  # "<=", "=", ">="
    rhs: Fraction

    def activity(self, values) -> Fraction:
        return sum((c * values[j] for j, c in self.coefs), Fraction(0))

    def violation(self, values) -> Fraction:
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(Fraction(0), lhs - self.rhs)
        if self.sense == ">=":
            return max(Fraction(0), self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class MilpModel:
    variables: list[Variable] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: dict[int, Fraction] = field(default_factory=dict)
    # bookkeeping for decoding
    ts: TransitionSystem | None = None
    automaton: RelaxedAutomaton | None = None
    blocks: tuple[Block, ...] = ()
    lam: Fraction = Fraction(1)
    num_robots: int = 0
    label_masks: tuple[int, ...] = ()
    index: dict[tuple, int] = field(default_factory=dict)

    def add_var(self, name, kind, lb, ub, family, key) -> int:
        j = len(self.variables)
        self.variables.append(Variable(name, kind, Fraction(lb), Fraction(ub), family, key))
        self.index[(family,) + key] = j
        return j

    def add_row(self, name, family, coefs: dict[int, Fraction], sense, rhs) -> None:
        items = tuple(sorted((j, Fraction(c)) for j, c in coefs.items() if c != 0))
        self.rows.append(Row(name, family, items, sense, Fraction(rhs)))

    def var(self, family: str, *key) -> int | None:
        return self.index.get((family,) + key)

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def objective_value(self, values) -> Fraction:
        return sum((c * values[j] for j, c in self.objective.items()), Fraction(0))

    def violations(self, values, tol: Fraction = Fraction(0)) -> list[str]:
        """Names of rows and bounds violated by more than ``tol``."""
        bad = []
        for j, v in enumerate(self.variables):
            x = values[j]
            if x < v.lb - tol or x > v.ub + tol:
                bad.append(f"bound {v.name}")
            if v.kind != CONTINUOUS and abs(x - round(x)) > tol:
                bad.append(f"integrality {v.name}")
        for r in self.rows:
            if r.violation(values) > tol:
                bad.append(r.name)
        return bad

    def repair(self, values: list[Fraction]) -> list[Fraction]:
        """Raise coverage indicators to their largest feasible values.

        They carry no cost, so this keeps any integer assignment's objective
        while removing float residue from the relaxation.
        """
        out = list(values)
        nodes_with = self._nodes_with
        cover: dict[tuple[int, int], Fraction] = {}
        for j, v in enumerate(self.variables):
            if v.family == "xiA":
                q, ap = v.key
                total = sum(
                    (out[k] for x in nodes_with[ap] if (k := self.var("zS", x, q)) is not None),
                    Fraction(0),
                )
                out[j] = min(Fraction(1), total)
                cover[(q, ap)] = out[j]
        for j, v in enumerate(self.variables):
            if v.family == "xiT":
                q, term = v.key
                vals = [cover[(q, ap)] for ap in _bits(term)]
                out[j] = min([Fraction(1)] + vals)
        return out

    @property
    def _nodes_with(self) -> dict[int, tuple[int, ...]]:
        return {
            ap: tuple(x for x, m in enumerate(self.label_masks) if m >> ap & 1)
            for ap in range(len(self.automaton.aps))
        }


def _bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


# -- reachability pruning ------------------------------------------------------


def prune_reachable(ts: TransitionSystem, A: RelaxedAutomaton, blocks: Iterable[Block] | None = None):
    """Pairs (x, q) that lie on some synchronized run from the start to acceptance.

    Blocks whose every term needs a proposition no reachable node at their
    target provides are discarded, and the search repeats until nothing
    changes. Returns ``(pairs, blocks)``.
    """
    active = list(A.blocks if blocks is None else blocks)
    labels = ts.masks_over(A.aps)
    while True:
        out_blocks: dict[int, list[Block]] = defaultdict(list)
        for b in active:
            out_blocks[b.src].append(b)
        fwd: set[tuple[int, int]] = set()
        stack = []
        for x in ts.initial_nodes:
            for b in out_blocks[A.initial]:
                if (x, b.dst) not in fwd:
                    fwd.add((x, b.dst))
                    stack.append((x, b.dst))
        while stack:
            x, q = stack.pop()
            if q in A.accepting:
                continue
            for b in out_blocks[q]:
                for x2 in ts.out_edges[x]:
                    if (x2, b.dst) not in fwd:
                        fwd.add((x2, b.dst))
                        stack.append((x2, b.dst))
        pred: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
        for x, q in fwd:
            if q in A.accepting:
                continue
            for b in out_blocks[q]:
                for x2 in ts.out_edges[x]:
                    if (x2, b.dst) in fwd:
                        pred[(x2, b.dst)].append((x, q))
        alive = {p for p in fwd if p[1] in A.accepting}
        stack = list(alive)
        while stack:
            for p in pred[stack.pop()]:
                if p not in alive:
                    alive.add(p)
                    stack.append(p)
        present: dict[int, int] = defaultdict(int)
        for x, q in alive:
            present[q] |= labels[x]
        live_states = {q for _, q in alive}
        kept = []
        for b in active:
            terms = tuple(t for t in b.terms if t & ~present[b.dst] == 0)
            if not terms:
                continue
            if b.src != A.initial and b.src not in live_states:
                continue
            kept.append(b if terms == b.terms else Block(b.index, b.src, b.dst, b.weight, terms, b.edges))
        if len(kept) == len(active) and all(k.terms == a.terms for k, a in zip(kept, active)):
            return alive, kept
        active = kept


# -- model construction --------------------------------------------------------

_SAFE = re.compile(r"[^A-Za-z0-9_]")


def _names(items: Iterable[str]) -> list[str]:
    out, seen = [], set()
    for s in items:
        base = _SAFE.sub("_", s) or "_"
        name, k = base, 1
        while name in seen or name == "V":
            name = f"{base}_{k}"
            k += 1
        seen.add(name)
        out.append(name)
    return out


def build_model(ts: TransitionSystem, A: RelaxedAutomaton, lam, prune: bool = True) -> MilpModel:
    lam = Fraction(lam)
    if lam <= 0:
        raise ModelError("the blending parameter must be positive")
    validate_dag(A)
    if not A.accepting:
        raise ModelError("the relaxed automaton has no accepting state")
    N = ts.num_robots
    X = range(len(ts.nodes))
    labels = ts.masks_over(A.aps)
    if prune:
        pairs, blocks = prune_reachable(ts, A)
    else:
        blocks = list(A.blocks)
        pairs = {(x, q) for x in X for q in range(A.num_states)}
    blocks = sorted(blocks, key=lambda b: b.index)

    node = _names(ts.nodes)
    state = [str(q) for q in range(A.num_states)]
    ap_name = _names(A.aps)
    m = MilpModel(ts=ts, automaton=A, blocks=tuple(blocks), lam=lam, num_robots=N, label_masks=labels)

    par = Counter((b.src, b.dst) for b in blocks)
    seen_pair: Counter = Counter()
    block_tag: dict[int, str] = {}
    for b in blocks:
        tag = f"{state[b.src]}_{state[b.dst]}"
        if par[(b.src, b.dst)] > 1:
            seen_pair[(b.src, b.dst)] += 1
            tag += f"_w{seen_pair[(b.src, b.dst)]}"
        block_tag[b.index] = tag

    # robots riding each block
    zE_of_block: dict[int, list[int]] = defaultdict(list)
    inflow: dict[tuple[int, int], list[int]] = defaultdict(list)
    outflow: dict[tuple[int, int], list[int]] = defaultdict(list)
    initial_nodes = set(ts.initial_nodes)
    for b in blocks:
        if b.src == A.initial:
            for x in sorted(initial_nodes):
                if (x, b.dst) in pairs:
                    j = m.add_var(f"zE_V_{node[x]}_{block_tag[b.index]}", INTEGER, 0, N,
                                  "zE", (VIRTUAL, x, b.index))
                    zE_of_block[b.index].append(j)
                    inflow[(x, b.dst)].append(j)
                    outflow[(x, A.initial)].append(j)
                    if b.weight:
                        m.objective[j] = lam * b.weight
            continue
        for u, v, w in ts.edges:
            if (u, b.src) in pairs and (v, b.dst) in pairs:
                j = m.add_var(f"zE_{node[u]}_{node[v]}_{block_tag[b.index]}", INTEGER, 0, N,
                              "zE", (u, v, b.index))
                zE_of_block[b.index].append(j)
                inflow[(v, b.dst)].append(j)
                outflow[(u, b.src)].append(j)
                cost = w + lam * b.weight
                if cost:
                    m.objective[j] = cost

    zS: dict[tuple[int, int], int] = {}
    for q in range(A.num_states):
        for x in X:
            if (x, q) in pairs:
                zS[(x, q)] = m.add_var(f"zS_{node[x]}_{state[q]}", INTEGER, 0, N, "zS", (x, q))

    xiE = {}
    for b in blocks:
        xiE[b.index] = m.add_var(f"xiE_{block_tag[b.index]}", BINARY, 0, 1, "xiE", (b.index,))
    xiT: dict[tuple[int, int], int] = {}
    xiA: dict[tuple[int, int], int] = {}
    for b in blocks:
        for t in b.terms:
            if (b.dst, t) not in xiT:
                tname = "_".join(ap_name[i] for i in _bits(t)) or "true"
                xiT[(b.dst, t)] = m.add_var(f"xiT_{state[b.dst]}_{tname}", CONTINUOUS, 0, 1,
                                            "xiT", (b.dst, t))
    for q, t in sorted(xiT):
        for ap in _bits(t):
            if (q, ap) not in xiA:
                xiA[(q, ap)] = m.add_var(f"xiA_{state[q]}_{ap_name[ap]}", CONTINUOUS, 0, 1,
                                         "xiA", (q, ap))

    one = Fraction(1)
    # the initial placement enters the product through the virtual node
    for x in sorted(initial_nodes):
        coefs = {j: one for j in outflow[(x, A.initial)]}
        m.add_row(f"place_{node[x]}", "placement", coefs, "=", ts.initial_counts[x])
    # conservation at intermediate states
    for q in A.nonfinal:
        for x in X:
            ins, outs = inflow[(x, q)], outflow[(x, q)]
            if not ins and not outs:
                continue
            coefs: dict[int, Fraction] = defaultdict(Fraction)
            for j in ins:
                coefs[j] += 1
            for j in outs:
                coefs[j] -= 1
            m.add_row(f"flow_{node[x]}_{state[q]}", "conservation", coefs, "=", 0)
    # occupancy equals outflow (inflow at accepting states)
    for (x, q), s in sorted(zS.items(), key=lambda kv: kv[1]):
        flows = inflow[(x, q)] if q in A.accepting else outflow[(x, q)]
        coefs = defaultdict(Fraction)
        coefs[s] += 1
        for j in flows:
            coefs[j] -= 1
        m.add_row(f"occ_{node[x]}_{state[q]}", "occupancy", coefs, "=", 0)
    # one outgoing block per state
    by_src: dict[int, list[int]] = defaultdict(list)
    for b in blocks:
        by_src[b.src].append(b.index)
    for q in sorted(by_src):
        m.add_row(f"pick_{state[q]}", "one_block", {xiE[i]: one for i in by_src[q]}, "<=", 1)
    # flow only on the selected block
    for b in blocks:
        coefs = {j: one for j in zE_of_block[b.index]}
        coefs[xiE[b.index]] = Fraction(-N)
        m.add_row(f"ride_{block_tag[b.index]}", "block_flow", coefs, "<=", 0)
    # a selected block needs one of its terms covered
    for b in blocks:
        coefs = {xiE[b.index]: one}
        for t in b.terms:
            coefs[xiT[(b.dst, t)]] = -one
        m.add_row(f"term_{block_tag[b.index]}", "term_cover", coefs, "<=", 0)
    # a covered term needs all its propositions
    for (q, t), jt in sorted(xiT.items(), key=lambda kv: kv[1]):
        for ap in _bits(t):
            m.add_row(f"prop_{m.variables[jt].name[4:]}_{ap_name[ap]}", "prop_cover",
                      {jt: one, xiA[(q, ap)]: -one}, "<=", 0)
    # a proposition is covered only if some robot sits on a node carrying it
    for (q, ap), ja in sorted(xiA.items(), key=lambda kv: kv[1]):
        coefs = {ja: one}
        for x in X:
            if labels[x] >> ap & 1 and (x, q) in zS:
                coefs[zS[(x, q)]] = -one
        m.add_row(f"seen_{state[q]}_{ap_name[ap]}", "presence", coefs, "<=", 0)
    # somebody reaches acceptance
    coefs = {s: one for (x, q), s in zS.items() if q in A.accepting}
    m.add_row("accept", "acceptance", coefs, ">=", 1)
    return m


# -- export --------------------------------------------------------------------


def _num(f: Fraction) -> str:
    if f.denominator == 1:
        return str(f.numerator)
    return repr(float(f))


def _scaled(coefs, rhs=Fraction(0)):
    den = lcm(*(c.denominator for _, c in coefs), rhs.denominator) if coefs else rhs.denominator
    return [(j, c * den) for j, c in coefs], rhs * den


def _wrap(prefix: str, terms: list[str], per_line: int = 8) -> list[str]:
    lines = []
    for k in range(0, max(len(terms), 1), per_line):
        chunk = " ".join(terms[k:k + per_line])
        lines.append((prefix if k == 0 else " " * len(prefix)) + chunk)
    return lines


def _terms(coefs, names) -> list[str]:
    out = []
    for i, (j, c) in enumerate(coefs):
        sign = "-" if c < 0 else ("+" if i else "")
        mag = abs(c)
        body = names[j] if mag == 1 else f"{_num(mag)} {names[j]}"
        out.append(f"{sign} {body}" if sign else body)
    return out


def export_lp(model: MilpModel) -> str:
    """CPLEX-LP text: Minimize / Subject To / Bounds / Generals / Binaries / End."""
    names = [v.name for v in model.variables]
    lines = ["\\ relaxed multi-robot plan", "Minimize"]
    obj = sorted(model.objective.items())
    if obj:
        lines += _wrap(" obj: ", _terms(obj, names))
    else:
        lines.append(f" obj: 0 {names[0]}" if names else " obj: 0")
    lines.append("Subject To")
    for r in model.rows:
        coefs, rhs = _scaled(list(r.coefs), r.rhs)
        body = _terms(coefs, names) or [f"0 {names[0]}"]
        body[-1] += f" {r.sense} {_num(rhs)}"
        lines += _wrap(f" {r.name}: ", body)
    lines.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY:
            continue
        lines.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    gens = [v.name for v in model.variables if v.kind == INTEGER]
    bins = [v.name for v in model.variables if v.kind == BINARY]
    lines.append("Generals")
    lines += _wrap(" ", gens) if gens else []
    lines.append("Binaries")
    lines += _wrap(" ", bins) if bins else []
    lines.append("End")
    return "\n".join(lines) + "\n"


def model_stats(model: MilpModel) -> dict:
    return {
        "variables": model.num_vars,
        "constraints": len(model.rows),
        "by_kind": dict(sorted(Counter(v.family for v in model.variables).items())),
        "by_family": dict(sorted(Counter(r.family for r in model.rows).items())),
        "binaries": sum(1 for v in model.variables if v.kind == BINARY),
        "integers": sum(1 for v in model.variables if v.kind == INTEGER),
    }


def dump_stats(model: MilpModel) -> str:
    return json.dumps(model_stats(model), indent=2, sort_keys=True)
