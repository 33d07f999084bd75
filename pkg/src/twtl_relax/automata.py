"""Acyclic automata for TWTL formulas.

Formulas are first compiled to a *layered* NFA (every state sits at a fixed
time step, guards are monotone DNFs) and then determinized by subset
construction over guard profiles. Symbols are bitmasks over an ordered tuple of
proposition names.

Determinization can introduce negated literals: the class "A fires but B does
not" is not expressible positively. DFA guards therefore store each term as a
``(pos, neg)`` pair of bitmasks. Every consumer downstream of the DFA works with
:meth:`Guard.upward_closure`, which is negation-free.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .twtl import And, Concat, Formula, Hold, Or, Within, norm, propositions

__all__ = [
    "Guard", "guard_sat", "Nfa", "SpecDfa", "build_nfa", "determinize", "minimize",
    "translate", "accepts", "accepts_upward", "is_dag", "find_cycle", "to_dot",
    "symbol_mask", "mask_names",
]


def symbol_mask(names: Iterable[str], aps: Sequence[str]) -> int:
    idx = {a: i for i, a in enumerate(aps)}
    mask = 0
    for n in names:
        mask |= 1 << idx[n]
    return mask


def mask_names(mask: int, aps: Sequence[str]) -> tuple[str, ...]:
    return tuple(a for i, a in enumerate(aps) if mask >> i & 1)


def _minimal_masks(masks: Iterable[int]) -> tuple[int, ...]:
    """Drop masks that are supersets of another mask."""
    uniq = sorted(set(masks), key=lambda m: (bin(m).count("1"), m))
    keep: list[int] = []
    for m in uniq:
        if not any(k & m == k for k in keep):
            keep.append(m)
    return tuple(sorted(keep))


def _prime_implicants(k: int, minterms: Iterable[int]) -> list[tuple[int, int]]:
    """Quine-McCluskey over ``k`` local variables; returns (value, dash) cubes."""
    current = {(m, 0) for m in minterms}
    primes: set[tuple[int, int]] = set()
    while current:
        merged: set[tuple[int, int]] = set()
        used: set[tuple[int, int]] = set()
        by_dash: dict[int, list[int]] = defaultdict(list)
        for value, dash in current:
            by_dash[dash].append(value)
        for dash, values in by_dash.items():
            vals = set(values)
            for v in values:
                for bit in range(k):
                    b = 1 << bit
                    if dash & b or v & b:
                        continue
                    partner = v | b
                    if partner in vals:
                        merged.add((v, dash | b))
                        used.add((v, dash))
                        used.add((partner, dash))
        primes |= current - used
        current = merged
    return sorted(primes)


@dataclass(frozen=True)
class Guard:
    """Boolean guard in DNF; each term is ``(pos, neg)`` bitmasks.

    The empty term ``(0, 0)`` is the constant true. A guard with no terms is
    unsatisfiable.
    """

    terms: tuple[tuple[int, int], ...]

    @staticmethod
    def true() -> "Guard":
        return Guard(((0, 0),))

    @staticmethod
    def monotone(pos_terms: Iterable[int]) -> "Guard":
        return Guard(tuple((p, 0) for p in _minimal_masks(pos_terms)))

    @staticmethod
    def from_minterms(bits: Sequence[int], minterms: Iterable[int]) -> "Guard":
        """Complete sum of prime implicants of a function over the given bit positions."""
        cubes = _prime_implicants(len(bits), minterms)
        terms = []
        for value, dash in cubes:
            pos = neg = 0
            for i, bit in enumerate(bits):
                if dash >> i & 1:
                    continue
                if value >> i & 1:
                    pos |= 1 << bit
                else:
                    neg |= 1 << bit
            terms.append((pos, neg))
        return Guard(tuple(sorted(terms)))

    @cached_property
    def support(self) -> int:
        m = 0
        for p, n in self.terms:
            m |= p | n
        return m

    @property
    def is_monotone(self) -> bool:
        return all(n == 0 for _, n in self.terms)

    def sat(self, sigma: int) -> bool:
        for p, n in self.terms:
            if p & ~sigma == 0 and n & sigma == 0:
                return True
        return False

    def sat_upward(self, sigma: int) -> bool:
        """Satisfaction of the upward closure (negative literals ignored)."""
        for p, _ in self.terms:
            if p & ~sigma == 0:
                return True
        return False

    def upward_closure(self) -> "Guard":
        return Guard.monotone(p for p, n in self.terms if p & n == 0)

    @property
    def positive_terms(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.terms)

    def conj(self, other: "Guard") -> "Guard":
        """Conjunction of two monotone guards."""
        return Guard.monotone(p | q for p, _ in self.terms for q, _ in other.terms)

    def union(self, other: "Guard") -> "Guard":
        bits = _bits(self.support | other.support)
        return _guard_from_function(bits, lambda s: self.sat(s) or other.sat(s))

    def pretty(self, aps: Sequence[str]) -> str:
        if not self.terms:
            return "false"
        parts = []
        for p, n in self.terms:
            lits = [aps[i] for i in _bits(p)] + ["!" + aps[i] for i in _bits(n)]
            parts.append("&".join(lits) if lits else "true")
        return " | ".join(parts)


def guard_sat(g: Guard, sigma: int) -> bool:
    return g.sat(sigma)


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _spread(bits: Sequence[int], local: int) -> int:
    s = 0
    for i, b in enumerate(bits):
        if local >> i & 1:
            s |= 1 << b
    return s


def _guard_from_function(bits: Sequence[int], pred) -> Guard:
    minterms = [m for m in range(1 << len(bits)) if pred(_spread(bits, m))]
    return Guard.from_minterms(bits, minterms)


# -- layered NFA -------------------------------------------------------------


@dataclass
class Nfa:
    """Acyclic NFA with monotone guards; ``depth[s]`` = symbols read to reach ``s``."""

    depth: list[int] = field(default_factory=list)
    edges: list[tuple[int, Guard, int]] = field(default_factory=list)
    initial: int = 0
    accepting: set[int] = field(default_factory=set)

    def add_state(self, depth: int) -> int:
        self.depth.append(depth)
        return len(self.depth) - 1

    @property
    def num_states(self) -> int:
        return len(self.depth)

    def out(self) -> list[list[tuple[Guard, int]]]:
        adj: list[list[tuple[Guard, int]]] = [[] for _ in self.depth]
        for s, g, d in self.edges:
            adj[s].append((g, d))
        return adj

    def embed(self, other: "Nfa", initial_as: int, accept_as=None) -> dict[int, int]:
        """Copy ``other`` into self, gluing its initial state onto ``initial_as``.

        ``accept_as(depth)`` may return an existing state to glue accepting
        states onto; otherwise fresh states are created.
        """
        base = self.depth[initial_as] - other.depth[other.initial]
        mapping = {other.initial: initial_as}
        for s in range(other.num_states):
            if s in mapping:
                continue
            d = base + other.depth[s]
            if s in other.accepting and accept_as is not None:
                mapping[s] = accept_as(d)
            else:
                mapping[s] = self.add_state(d)
        for s, g, d in other.edges:
            self.edges.append((mapping[s], g, mapping[d]))
        return mapping


def _atom_guard(prop: str | None, aps: Sequence[str]) -> Guard:
    if prop is None:
        return Guard.true()
    return Guard.monotone([symbol_mask([prop], aps)])


def build_nfa(f: Formula, aps: Sequence[str]) -> Nfa:
    """Compile a formula to a layered, acyclic NFA."""
    if isinstance(f, Hold):
        nfa = Nfa()
        prev = nfa.add_state(0)
        g = _atom_guard(f.prop, aps)
        for step in range(f.d + 1):
            nxt = nfa.add_state(step + 1)
            nfa.edges.append((prev, g, nxt))
            prev = nxt
        nfa.accepting = {prev}
        return nfa
    if isinstance(f, Or):
        left, right = build_nfa(f.lhs, aps), build_nfa(f.rhs, aps)
        nfa = Nfa()
        root = nfa.add_state(0)
        ml = nfa.embed(left, root)
        mr = nfa.embed(right, root)
        nfa.accepting = {ml[s] for s in left.accepting} | {mr[s] for s in right.accepting}
        return nfa
    if isinstance(f, Concat):
        left, right = build_nfa(f.lhs, aps), build_nfa(f.rhs, aps)
        nfa = Nfa()
        root = nfa.add_state(0)
        ml = nfa.embed(left, root)
        accepting: set[int] = set()
        for s in sorted(left.accepting):
            mr = nfa.embed(right, ml[s])
            accepting |= {mr[t] for t in right.accepting}
        nfa.accepting = accepting
        return nfa
    if isinstance(f, And):
        return _and_product(build_nfa(f.lhs, aps), build_nfa(f.rhs, aps))
    if isinstance(f, Within):
        return _within(build_nfa(f.inner, aps), norm(f.inner), f.a, f.b)
    raise TypeError(f"not a formula: {f!r}")


_DONE = -1


def _and_product(left: Nfa, right: Nfa) -> Nfa:
    """Synchronized product; a finished operand latches and reads ``true``."""
    lout, rout = left.out(), right.out()
    true = Guard.true()
    nfa = Nfa()
    index: dict[tuple, int] = {}

    def state(key, depth):
        if key not in index:
            index[key] = nfa.add_state(depth)
        return index[key]

    start = (left.initial, right.initial)
    nfa.initial = state(start, 0)
    queue = deque([start])
    while queue:
        key = queue.popleft()
        a, b = key
        here = index[key]
        depth = nfa.depth[here]
        opts_a = [(true, _DONE)] if a == _DONE else [
            (g, _DONE if d in left.accepting else d) for g, d in lout[a]
        ]
        opts_b = [(true, _DONE)] if b == _DONE else [
            (g, _DONE if d in right.accepting else d) for g, d in rout[b]
        ]
        for ga, da in opts_a:
            for gb, db in opts_b:
                g = ga.conj(gb)
                if da == _DONE and db == _DONE:
                    nkey = ("acc", depth + 1)
                    fresh = nkey not in index
                    tgt = state(nkey, depth + 1)
                    nfa.accepting.add(tgt)
                else:
                    nkey = (da, db)
                    fresh = nkey not in index
                    tgt = state(nkey, depth + 1)
                    if fresh:
                        queue.append(nkey)
                nfa.edges.append((here, g, tgt))
    return nfa


def _within(inner: Nfa, inner_norm: int, a: int, b: int) -> Nfa:
    """Wait ``a`` steps, start ``inner`` at any j in [a, b - norm], pad to step b."""
    true = Guard.true()
    nfa = Nfa()
    chain = [nfa.add_state(0)]
    for j in range(1, b - inner_norm + 1):
        chain.append(nfa.add_state(j))
        nfa.edges.append((chain[j - 1], true, chain[j]))
    pads: dict[int, int] = {}

    def pad(depth: int) -> int:
        # state from which `true` edges lead to the accepting state at depth b+1
        if depth in pads:
            return pads[depth]
        s = nfa.add_state(depth)
        pads[depth] = s
        if depth < b + 1:
            nfa.edges.append((s, true, pad(depth + 1)))
        return s

    for j in range(a, b - inner_norm + 1):
        nfa.embed(inner, chain[j], accept_as=pad)
    nfa.accepting = {pad(b + 1)}
    return _trim(nfa)


def _trim(nfa: Nfa) -> Nfa:
    """Remove states not reachable from the initial state or not co-reachable."""
    fwd = [[] for _ in nfa.depth]
    bwd = [[] for _ in nfa.depth]
    for s, _, d in nfa.edges:
        fwd[s].append(d)
        bwd[d].append(s)
    reach = _closure([nfa.initial], fwd)
    coreach = _closure(nfa.accepting, bwd)
    keep = sorted(reach & coreach | {nfa.initial})
    remap = {old: new for new, old in enumerate(keep)}
    out = Nfa(
        depth=[nfa.depth[s] for s in keep],
        edges=[(remap[s], g, remap[d]) for s, g, d in nfa.edges if s in remap and d in remap],
        initial=remap[nfa.initial],
        accepting={remap[s] for s in nfa.accepting if s in remap},
    )
    return out


def _closure(seeds, adj) -> set[int]:
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        s = stack.pop()
        for t in adj[s]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


# -- deterministic automaton -------------------------------------------------


@dataclass(frozen=True)
class SpecDfa:
    """Acyclic DFA; accepting states are sinks."""

    num_states: int
    initial: int
    edges: tuple[tuple[int, Guard, int], ...]
    accepting: frozenset[int]
    aps: tuple[str, ...]
    horizon: int = 0

    @cached_property
    def out(self) -> tuple[tuple[tuple[Guard, int], ...], ...]:
        adj: list[list[tuple[Guard, int]]] = [[] for _ in range(self.num_states)]
        for s, g, d in self.edges:
            adj[s].append((g, d))
        return tuple(tuple(a) for a in adj)

    def step(self, state: int, sigma: int) -> int | None:
        for g, d in self.out[state]:
            if g.sat(sigma):
                return d
        return None


def determinize(nfa: Nfa, aps: Sequence[str], horizon: int = 0) -> SpecDfa:
    """Subset construction over guard-profile classes.

    All subsets containing an accepting NFA state collapse into one accepting
    sink, so the DFA accepts exactly at the earliest completion.
    """
    out = nfa.out()
    index: dict[frozenset, int] = {}
    ACC = 0
    edges: list[tuple[int, Guard, int]] = []
    start = frozenset([nfa.initial])
    index[start] = 1
    order = [start]
    queue = deque([start])
    while queue:
        subset = queue.popleft()
        src = index[subset]
        moves = [(g, d) for s in sorted(subset) for g, d in out[s]]
        if not moves:
            continue
        support = 0
        for g, _ in moves:
            support |= g.support
        bits = _bits(support)
        classes: dict[object, list[int]] = {}
        for local in range(1 << len(bits)):
            sigma = _spread(bits, local)
            succ = frozenset(d for g, d in moves if g.sat(sigma))
            if not succ:
                continue
            key = ACC if succ & nfa.accepting else succ
            classes.setdefault(key, []).append(local)
        for key in sorted(classes, key=lambda k: (-1,) if k == ACC else tuple(sorted(k))):
            if key == ACC:
                dst = ACC
            else:
                if key not in index:
                    index[key] = len(index) + 1
                    order.append(key)
                    queue.append(key)
                dst = index[key]
            edges.append((src, Guard.from_minterms(bits, classes[key]), dst))
    dfa = SpecDfa(
        num_states=len(index) + 1,
        initial=1,
        edges=tuple(edges),
        accepting=frozenset([ACC]),
        aps=tuple(aps),
        horizon=horizon,
    )
    return _renumber(dfa)


def _renumber(dfa: SpecDfa) -> SpecDfa:
    """BFS numbering from the initial state; drops unreachable states."""
    order = {dfa.initial: 0}
    queue = deque([dfa.initial])
    while queue:
        s = queue.popleft()
        for _, d in sorted(dfa.out[s], key=lambda e: e[0].terms):
            if d not in order:
                order[d] = len(order)
                queue.append(d)
    edges = tuple(
        sorted(
            ((order[s], g, order[d]) for s, g, d in dfa.edges if s in order),
            key=lambda e: (e[0], e[2], e[1].terms),
        )
    )
    return SpecDfa(
        num_states=len(order),
        initial=0,
        edges=edges,
        accepting=frozenset(order[s] for s in dfa.accepting if s in order),
        aps=dfa.aps,
        horizon=dfa.horizon,
    )


def minimize(dfa: SpecDfa) -> SpecDfa:
    """Bottom-up merging of equivalent states (exact for acyclic DFAs).

    States that cannot reach acceptance are removed together with the edges
    into them.
    """
    topo = _topological(dfa.num_states, [(s, d) for s, _, d in dfa.edges])
    if topo is None:
        raise ValueError("automaton has a cycle")
    DEAD = -1
    cls: dict[int, int] = {}
    signatures: dict[tuple, int] = {}
    merged_out: dict[int, list[tuple[Guard, int]]] = {}
    for s in reversed(topo):
        if s in dfa.accepting:
            sig: tuple = ("acc",)
        else:
            by_target: dict[int, Guard] = {}
            for g, d in dfa.out[s]:
                t = cls[d]
                if t == DEAD:
                    continue
                by_target[t] = by_target[t].union(g) if t in by_target else g
            if not by_target:
                cls[s] = DEAD
                continue
            merged_out[s] = sorted(((g, t) for t, g in by_target.items()), key=lambda e: e[1])
            sig = tuple((t, g.terms) for g, t in merged_out[s])
        if sig not in signatures:
            signatures[sig] = len(signatures)
        cls[s] = signatures[sig]
    if cls[dfa.initial] == DEAD:
        # empty language: a lone, non-accepting initial state
        return SpecDfa(1, 0, (), frozenset(), dfa.aps, dfa.horizon)
    edges = {}
    for s, outs in merged_out.items():
        c = cls[s]
        for g, t in outs:
            edges[(c, t)] = g
    acc = frozenset(cls[s] for s in dfa.accepting if cls.get(s, DEAD) != DEAD)
    reduced = SpecDfa(
        num_states=len(signatures),
        initial=cls[dfa.initial],
        edges=tuple((s, g, d) for (s, d), g in edges.items()),
        accepting=acc,
        aps=dfa.aps,
        horizon=dfa.horizon,
    )
    return _renumber(reduced)


def translate(f: Formula, aps: Sequence[str] | None = None, reduce: bool = True) -> SpecDfa:
    """DFA accepting a word iff the formula's earliest completion is its last symbol."""
    if aps is None:
        aps = tuple(sorted(propositions(f)))
    missing = propositions(f) - set(aps)
    if missing:
        raise ValueError(f"propositions {sorted(missing)} not in the alphabet")
    dfa = determinize(build_nfa(f, aps), aps, norm(f))
    return minimize(dfa) if reduce else dfa


def accepts(dfa: SpecDfa, word: Sequence[int]) -> bool:
    """Exact deterministic run; symbols after reaching the accepting sink reject."""
    s = dfa.initial
    for sigma in word:
        if s in dfa.accepting:
            return False
        nxt = dfa.step(s, sigma)
        if nxt is None:
            return False
        s = nxt
    return s in dfa.accepting


def accepts_upward(dfa: SpecDfa, word: Sequence[int]) -> bool:
    """Nondeterministic run under the upward closure of every guard."""
    current = {dfa.initial}
    for sigma in word:
        current = {d for s in current for g, d in dfa.out[s] if g.sat_upward(sigma)}
        if not current:
            return False
    return bool(current & dfa.accepting)


# -- graph utilities -----------------------------------------------------------


def _topological(n: int, arcs: Iterable[tuple[int, int]]) -> list[int] | None:
    indeg = [0] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    for s, d in arcs:
        adj[s].append(d)
        indeg[d] += 1
    queue = deque(i for i in range(n) if indeg[i] == 0)
    order = []
    while queue:
        s = queue.popleft()
        order.append(s)
        for d in adj[s]:
            indeg[d] -= 1
            if indeg[d] == 0:
                queue.append(d)
    return order if len(order) == n else None


def _arcs(automaton) -> tuple[int, list[tuple[int, int]]]:
    edges = automaton.edges
    arcs = [(e[0], e[-1]) if not hasattr(e, "src") else (e.src, e.dst) for e in edges]
    return automaton.num_states, arcs


def is_dag(automaton) -> bool:
    n, arcs = _arcs(automaton)
    return _topological(n, arcs) is not None


def find_cycle(n: int, arcs: Iterable[tuple[int, int]]) -> list[int] | None:
    """Return one directed cycle as a list of states, or None."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for s, d in arcs:
        adj[s].append(d)
    color = [0] * n
    parent = [-1] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(adj[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if color[nxt] == 0:
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(adj[nxt])))
                    break
                if color[nxt] == 1:
                    cycle = [nxt]
                    cur = node
                    while cur != nxt:
                        cycle.append(cur)
                        cur = parent[cur]
                    cycle.append(nxt)
                    return cycle[::-1]
            else:
                color[node] = 2
                stack.pop()
    return None


def to_dot(dfa: SpecDfa, name: str = "dfa") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point];']
    for s in range(dfa.num_states):
        shape = "doublecircle" if s in dfa.accepting else "circle"
        lines.append(f'  {s} [shape={shape}];')
    lines.append(f"  __start -> {dfa.initial};")
    for s, g, d in dfa.edges:
        label = g.pretty(dfa.aps).replace('"', '\\"')
        lines.append(f'  {s} -> {d} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
