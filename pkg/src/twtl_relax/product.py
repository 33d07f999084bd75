"""Relaxed specification automaton: the product of the edit transducer and the mission DFA.

Product edges carry monotone guards over the *executed* symbol. A rule edge
built from a DFA transition with guard term ``P`` executes ``(P - lhs) | rhs``:
the rule swaps the propositions it names and the rest of the term is still
required. Single-symbol rule edges whose terms do not touch the rule's left
side are dropped, because the identity edge with the same term reaches the same
state for free.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .automata import Guard, SpecDfa, _minimal_masks, find_cycle, mask_names
from .env import format_fraction
from .preferences import IDENTITY, Wfse

__all__ = [
    "ProductEdge", "Block", "RelaxedAutomaton", "ProductCycleError", "construct_product",
    "accepts_relaxed", "validate_dag", "product_to_dot", "product_stats",
]


class ProductCycleError(ValueError):
    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__("product automaton has a cycle: " + " -> ".join(map(str, cycle)))


@dataclass(frozen=True)
class ProductEdge:
    src: int
    dst: int
    guard: Guard  # monotone, over executed symbols
    weight: Fraction
    kind: str  # "identity" or "pair"
    rule_id: int
    rule_step: int
    dfa_src: int
    dfa_dst: int
    # executed term -> specified symbol it stands in for
    spec_of: tuple[tuple[int, int], ...]
    rule_exec: int = 0  # the rule's own symbols, for reporting
    rule_spec: int = 0
    parts: tuple = ()  # bundled rules, see WfseEdge.parts

    def spec_symbol(self, term: int) -> int:
        return dict(self.spec_of)[term]


@dataclass(frozen=True)
class Block:
    """Parallel edges q -> q' sharing a weight; the unit the MILP selects."""

    index: int
    src: int
    dst: int
    weight: Fraction
    terms: tuple[int, ...]
    edges: tuple[int, ...]


@dataclass(frozen=True)
class RelaxedAutomaton:
    states: tuple[tuple[int, int], ...]  # (wfse state, dfa state)
    initial: int
    edges: tuple[ProductEdge, ...]
    accepting: frozenset[int]
    aps: tuple[str, ...]

    @property
    def num_states(self) -> int:
        return len(self.states)

    @cached_property
    def out(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.states]
        for i, e in enumerate(self.edges):
            adj[e.src].append(i)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted({self.edges[i].dst for i in o})) for o in self.out)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        pred: list[set[int]] = [set() for _ in self.states]
        for e in self.edges:
            pred[e.dst].add(e.src)
        return tuple(tuple(sorted(p)) for p in pred)

    @property
    def nonfinal(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.num_states) if q != self.initial and q not in self.accepting)

    def terms(self, q: int, q2: int) -> dict[int, Fraction]:
        """Guard terms of all parallel edges q -> q2, each with its cheapest weight."""
        found: dict[int, Fraction] = {}
        for i in self.out[q]:
            e = self.edges[i]
            if e.dst != q2:
                continue
            for t in e.guard.positive_terms:
                if t not in found or e.weight < found[t]:
                    found[t] = e.weight
        if not found:
            raise KeyError(f"no edge {q} -> {q2}")
        return found

    @cached_property
    def blocks(self) -> tuple[Block, ...]:
        """Group parallel edges by weight and drop dominated terms.

        A term is dominated when a cheaper-or-equal block between the same
        states has a subset term: any placement enabling it enables the other.
        """
        groups: dict[tuple[int, int, Fraction], list[int]] = defaultdict(list)
        for i, e in enumerate(self.edges):
            groups[(e.src, e.dst, e.weight)].append(i)
        out: list[Block] = []
        kept: dict[tuple[int, int], list[int]] = defaultdict(list)
        for (q, q2, w), idx in sorted(groups.items()):
            raw = {t for i in idx for t in self.edges[i].guard.positive_terms}
            cheaper = kept[(q, q2)]
            terms = [t for t in _minimal_masks(raw) if not any(c & t == c for c in cheaper)]
            if not terms:
                continue
            kept[(q, q2)].extend(terms)
            out.append(Block(len(out), q, q2, w, tuple(terms), tuple(idx)))
        return tuple(out)

    @cached_property
    def blocks_out(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.states]
        for b in self.blocks:
            adj[b.src].append(b.index)
        return tuple(tuple(a) for a in adj)

    def state_name(self, q: int) -> str:
        z, s = self.states[q]
        return f"z{z}s{s}"


def construct_product(wfse: Wfse, dfa: SpecDfa) -> RelaxedAutomaton:
    """Forward exploration from (z0, s0) with an explicit stack."""
    if tuple(wfse.aps) != tuple(dfa.aps):
        raise ValueError("transducer and automaton use different proposition orders")
    closures = {id(g): g.upward_closure() for _, g, _ in dfa.edges}
    index: dict[tuple[int, int], int] = {}
    states: list[tuple[int, int]] = []
    edges: list[ProductEdge] = []
    accepting: set[int] = set()

    def state(key):
        if key not in index:
            index[key] = len(states)
            states.append(key)
            if key[0] in wfse.accepting and key[1] in dfa.accepting:
                accepting.add(index[key])
            stack.append(key)
        return index[key]

    stack: list[tuple[int, int]] = []
    start = state((wfse.initial, dfa.initial))
    while stack:
        z, s = stack.pop()
        here = index[(z, s)]
        if here in accepting:
            continue
        for we in wfse.out(z):
            for g, s2 in dfa.out[s]:
                closure = closures[id(g)]
                if not closure.terms:
                    continue
                if we.kind == IDENTITY:
                    spec_of = {t: t for t in closure.positive_terms}
                    guard = closure
                else:
                    lhs, rhs = we.spec_mask, we.exec_mask
                    single = we.src == wfse.initial and we.dst == wfse.initial
                    spec_of = {}
                    for p in closure.positive_terms:
                        if single and p & lhs == 0:
                            continue
                        if any(p & spec == 0 for _, _, spec, _ in we.parts):
                            continue  # a smaller bundle does the same job
                        spec_of.setdefault((p & ~lhs) | rhs, p | lhs)
                    if not spec_of:
                        continue
                    guard = Guard.monotone(spec_of)
                    spec_of = {t: spec_of[t] for t in guard.positive_terms}
                dst = state((we.dst, s2))
                edges.append(
                    ProductEdge(
                        here, dst, guard, we.weight, we.kind, we.rule_id, we.rule_step,
                        s, s2, tuple(sorted(spec_of.items())), we.exec_mask, we.spec_mask,
                        we.parts,
                    )
                )
    return RelaxedAutomaton(tuple(states), start, tuple(edges), frozenset(accepting), tuple(dfa.aps))


def validate_dag(A) -> None:
    cycle = find_cycle(A.num_states, [(e.src, e.dst) for e in A.edges])
    if cycle is not None:
        raise ProductCycleError(cycle)


def accepts_relaxed(A: RelaxedAutomaton, word: Sequence[int]):
    """Cheapest accepting run reading the executed word.

    Returns ``(weight, [edge index per symbol])`` or None.
    """
    best: dict[int, tuple[Fraction, tuple[int, ...]]] = {A.initial: (Fraction(0), ())}
    for sigma in word:
        nxt: dict[int, tuple[Fraction, tuple[int, ...]]] = {}
        for q, (cost, run) in sorted(best.items()):
            for i in A.out[q]:
                e = A.edges[i]
                if not e.guard.sat_upward(sigma):
                    continue
                c = cost + e.weight
                if e.dst not in nxt or c < nxt[e.dst][0]:
                    nxt[e.dst] = (c, run + (i,))
        best = nxt
        if not best:
            return None
    done = [(cost, run) for q, (cost, run) in best.items() if q in A.accepting]
    if not done:
        return None
    return min(done)


def product_stats(A: RelaxedAutomaton) -> dict:
    return {
        "states": A.num_states,
        "edges": len(A.edges),
        "accepting": len(A.accepting),
        "rule_edges": sum(1 for e in A.edges if e.kind != IDENTITY),
        "blocks": len(A.blocks),
    }


def product_to_dot(A: RelaxedAutomaton, name: str = "product") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  __start [shape=point];"]
    for q in range(A.num_states):
        shape = "doublecircle" if q in A.accepting else "circle"
        lines.append(f'  {q} [shape={shape}, label="{A.state_name(q)}"];')
    lines.append(f"  __start -> {A.initial};")
    for e in A.edges:
        label = e.guard.pretty(A.aps)
        if e.kind != IDENTITY:
            ids = [r for r, *_ in e.parts] or [e.rule_id]
            label += " / " + "+".join(f"r{r}" for r in ids)
        label += f" / {format_fraction(e.weight)}"
        lines.append(f'  {e.src} -> {e.dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_stats(A: RelaxedAutomaton) -> str:
    return json.dumps(product_stats(A), indent=2, sort_keys=True)


def term_names(term: int, aps: Sequence[str]) -> list[str]:
    return list(mask_names(term, aps))
