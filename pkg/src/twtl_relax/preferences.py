"""Weighted word-rewrite preferences and the edit transducer built from them.

A rule ``lhs -> rhs : w`` lets the team *execute* ``rhs`` where the mission
*specifies* ``lhs``, at penalty ``w``. Both sides are equal-length words of
symbols. A rule symbol rewrites the propositions it names and leaves the
rest of the symbol untouched, so ``{A} -> {B,D}`` also turns a specified
``{A,C}`` into an executed ``{B,C,D}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .env import to_fraction

__all__ = [
    "RewriteRule", "RuleError", "WfseEdge", "Wfse", "parse_rules", "build_wfse",
    "transform_cost", "pair_matches", "rule_propositions",
]

IDENTITY = "identity"
PAIR = "pair"


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class RewriteRule:
    lhs: tuple[frozenset[str], ...]
    rhs: tuple[frozenset[str], ...]
    weight: Fraction
    rule_id: int = 0

    def __post_init__(self):
        if not self.lhs:
            raise RuleError("a rule needs at least one symbol")
        if len(self.lhs) != len(self.rhs):
            raise RuleError(
                f"rule {self.rule_id}: lhs has {len(self.lhs)} symbols, rhs has {len(self.rhs)}"
            )
        if any(not s for s in self.lhs):
            raise RuleError(f"rule {self.rule_id}: empty symbol on the left-hand side")
        if self.weight < 0:
            raise RuleError(f"rule {self.rule_id}: negative weight")

    def __str__(self):
        word = lambda w: "".join("{" + ",".join(sorted(s)) + "}" for s in w)
        return f"{word(self.lhs)} -> {word(self.rhs)} : {self.weight}"


def rule_propositions(rules: Iterable[RewriteRule]) -> frozenset[str]:
    out: set[str] = set()
    for r in rules:
        for s in r.lhs + r.rhs:
            out |= s
    return frozenset(out)


_SYMBOL = re.compile(r"\{([^{}]*)\}")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")


def _parse_word(text: str, lineno: int) -> tuple[frozenset[str], ...]:
    text = text.strip()
    pos = 0
    word = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _SYMBOL.match(text, pos)
        if m is None:
            raise RuleError(f"line {lineno}: expected '{{' at {text[pos:]!r}")
        names = [n.strip() for n in m.group(1).split(",") if n.strip()]
        for n in names:
            if not _IDENT.match(n):
                raise RuleError(f"line {lineno}: invalid proposition name {n!r}")
        word.append(frozenset(names))
        pos = m.end()
    if not word:
        raise RuleError(f"line {lineno}: empty word")
    return tuple(word)


def parse_rules(
    text: str,
    ap_universe: Iterable[str] | None = None,
    allow_new_aps: bool = False,
) -> list[RewriteRule]:
    """Parse one rule per line: ``{A}{B} -> {C}{D,E} : 2``; ``#`` starts a comment.

    With ``ap_universe`` given, propositions outside it are rejected unless
    ``allow_new_aps`` is set.
    """
    known = None if ap_universe is None else set(ap_universe)
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise RuleError(f"line {lineno}: missing '->'")
        left, right = line.split("->", 1)
        if ":" not in right:
            raise RuleError(f"line {lineno}: missing ': <weight>'")
        right, weight_text = right.rsplit(":", 1)
        try:
            weight = to_fraction(weight_text.strip())
        except ValueError as exc:
            raise RuleError(f"line {lineno}: invalid weight {weight_text.strip()!r}") from exc
        try:
            rule = RewriteRule(
                _parse_word(left, lineno), _parse_word(right, lineno), weight, len(rules) + 1
            )
        except RuleError as exc:
            raise RuleError(f"line {lineno}: {exc}") from None
        if known is not None and not allow_new_aps:
            unknown = rule_propositions([rule]) - known
            if unknown:
                raise RuleError(
                    f"line {lineno}: unknown propositions {sorted(unknown)} "
                    "(pass allow_new_aps to permit them)"
                )
        rules.append(rule)
    return rules


@dataclass(frozen=True)
class WfseEdge:
    src: int
    dst: int
    kind: str  # IDENTITY or PAIR
    exec_mask: int = 0  # rewritten propositions as executed (rule rhs symbol)
    spec_mask: int = 0  # propositions they stand in for (rule lhs symbol)
    weight: Fraction = Fraction(0)
    rule_id: int = 0
    rule_step: int = 0
    # simultaneous single-symbol rules: (rule_id, exec_mask, spec_mask, weight) each
    parts: tuple[tuple[int, int, int, Fraction], ...] = ()


@dataclass(frozen=True)
class Wfse:
    """Edit transducer over (executed, specified) symbol pairs; z0 = 0 is the only final state."""

    num_states: int
    edges: tuple[WfseEdge, ...]
    aps: tuple[str, ...]
    initial: int = 0

    @property
    def accepting(self) -> frozenset[int]:
        return frozenset([self.initial])

    def out(self, z: int) -> list[WfseEdge]:
        return [e for e in self.edges if e.src == z]


def build_wfse(rules: Sequence[RewriteRule], aps: Sequence[str], max_bundle: int = 3) -> Wfse:
    """Identity self-loop at z0 plus one chain z0 -> ... -> z0 per rule.

    The full rule weight sits on the first chain edge. Single-symbol rules
    with pairwise disjoint left sides may also fire together on one symbol;
    each such bundle of up to ``max_bundle`` rules is one more z0 self-loop
    carrying the summed weight.
    """
    idx = {a: i for i, a in enumerate(aps)}

    def mask(symbol):
        try:
            return sum(1 << idx[a] for a in symbol)
        except KeyError as exc:
            raise RuleError(f"proposition {exc.args[0]!r} not in the alphabet") from None

    edges = [WfseEdge(0, 0, IDENTITY)]
    n = 1
    for rule in rules:
        m = len(rule.lhs)
        chain = [0] + list(range(n, n + m - 1)) + [0]
        n += m - 1
        for k in range(m):
            edges.append(
                WfseEdge(
                    chain[k],
                    chain[k + 1],
                    PAIR,
                    exec_mask=mask(rule.rhs[k]),
                    spec_mask=mask(rule.lhs[k]),
                    weight=rule.weight if k == 0 else Fraction(0),
                    rule_id=rule.rule_id,
                    rule_step=k,
                )
            )
    edges.extend(_bundles([e for e in edges if e.kind == PAIR and e.src == 0 and e.dst == 0],
                          max_bundle))
    return Wfse(n, tuple(edges), tuple(aps))


def _bundles(singles: list[WfseEdge], max_bundle: int) -> list[WfseEdge]:
    found: dict[tuple[int, int], WfseEdge] = {}

    def grow(start, chosen, lhs, rhs, weight):
        if len(chosen) >= 2:
            key = (lhs, rhs)
            if key not in found or weight < found[key].weight:
                parts = tuple((e.rule_id, e.exec_mask, e.spec_mask, e.weight) for e in chosen)
                found[key] = WfseEdge(0, 0, PAIR, rhs, lhs, weight, chosen[0].rule_id, 0, parts)
        if len(chosen) == max_bundle:
            return
        for k in range(start, len(singles)):
            e = singles[k]
            if e.spec_mask & lhs:
                continue
            grow(k + 1, chosen + [e], lhs | e.spec_mask, rhs | e.exec_mask, weight + e.weight)

    grow(0, [], 0, 0, Fraction(0))
    return [found[k] for k in sorted(found)]


def pair_matches(edge: WfseEdge, executed: int, specified: int, superset: bool = False) -> bool:
    """Does the edge read the symbol pair (executed, specified)?

    A rule edge rewrites its own propositions and copies the context: there
    must be a set C with ``C | rhs == executed`` and ``C | lhs == specified``.
    With ``superset`` the executed symbol only needs to contain what is required.
    """
    if edge.kind == IDENTITY:
        return specified & ~executed == 0 if superset else executed == specified
    lhs, rhs = edge.spec_mask, edge.exec_mask
    if lhs & ~specified:
        return False
    if superset:
        return ((specified & ~lhs) | rhs) & ~executed == 0
    return (
        rhs & ~executed == 0
        and (executed & ~rhs) & ~specified == 0
        and (specified & ~lhs) & ~executed == 0
    )


def transform_cost(
    wfse: Wfse,
    exec_word: Sequence[int],
    spec_word: Sequence[int],
    superset: bool = False,
) -> Fraction | None:
    """Cheapest run from z0 back to z0 reading the pair word; None if there is none."""
    if len(exec_word) != len(spec_word):
        raise ValueError("words must have equal length")
    best: dict[int, Fraction] = {wfse.initial: Fraction(0)}
    for executed, specified in zip(exec_word, spec_word):
        nxt: dict[int, Fraction] = {}
        for z, cost in best.items():
            for e in wfse.out(z):
                if pair_matches(e, executed, specified, superset):
                    c = cost + e.weight
                    if e.dst not in nxt or c < nxt[e.dst]:
                        nxt[e.dst] = c
        best = nxt
        if not best:
            return None
    return best.get(wfse.initial)
