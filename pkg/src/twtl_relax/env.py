"""Weighted transition system describing the environment and the initial team placement."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping


class EnvError(ValueError):
    """Raised for malformed or invalid environment descriptions."""


def to_fraction(value) -> Fraction:
    """Exact conversion of JSON numbers / decimal strings / 'p/q' strings."""
    if isinstance(value, bool):
        raise EnvError(f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Decimal)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise EnvError(f"not a number: {value!r}") from exc
    raise EnvError(f"not a number: {value!r}")


def format_fraction(value: Fraction):
    """JSON-friendly rendering: int when integral, exact decimal string otherwise."""
    if value.denominator == 1:
        return value.numerator
    d = value.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        return float(Decimal(value.numerator) / Decimal(value.denominator))
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class TransitionSystem:
    """Environment abstraction with unit-duration moves.

    Nodes and atomic propositions are interned to dense integer ids: nodes in
    declaration order, propositions sorted by name. A label set is stored as a
    bitmask over proposition ids.
    """

    nodes: tuple[str, ...]
    labels: tuple[frozenset[str], ...]
    edges: tuple[tuple[int, int, Fraction], ...]
    initial_counts: tuple[int, ...]
    ap_universe: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.ap_universe:
            aps = sorted(set().union(*self.labels)) if self.labels else []
            object.__setattr__(self, "ap_universe", tuple(aps))
        self._validate()

    def _validate(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise EnvError("duplicate node id")
        if len(self.labels) != len(self.nodes) or len(self.initial_counts) != len(self.nodes):
            raise EnvError("labels/robot counts must be given per node")
        known = set(self.ap_universe)
        for lab in self.labels:
            if not lab <= known:
                raise EnvError(f"labels {sorted(lab - known)} outside the proposition universe")
        seen = set()
        n = len(self.nodes)
        for u, v, w in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise EnvError("edge references unknown node")
            if (u, v) in seen:
                raise EnvError(f"duplicate edge {self.nodes[u]}->{self.nodes[v]}")
            seen.add((u, v))
            if w < 0:
                raise EnvError(f"negative weight on {self.nodes[u]}->{self.nodes[v]}")
            if u == v and w != 0:
                raise EnvError(f"self-loop at {self.nodes[u]} must have weight 0")
        for i in range(n):
            if (i, i) not in seen:
                raise EnvError(f"missing self-loop at {self.nodes[i]}")
        if any(c < 0 for c in self.initial_counts):
            raise EnvError("negative robot count")
        if sum(self.initial_counts) < 1:
            raise EnvError("at least one robot is required")

    # -- derived indices ---------------------------------------------------
    @cached_property
    def node_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.nodes)}

    @cached_property
    def ap_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.ap_universe)}

    @cached_property
    def label_masks(self) -> tuple[int, ...]:
        idx = self.ap_index
        return tuple(sum(1 << idx[a] for a in lab) for lab in self.labels)

    @cached_property
    def weight(self) -> dict[tuple[int, int], Fraction]:
        return {(u, v): w for u, v, w in self.edges}

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.nodes]
        for u, v, _ in self.edges:
            out[u].append(v)
        return tuple(tuple(sorted(o)) for o in out)

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in self.nodes]
        for u, v, _ in self.edges:
            inc[v].append(u)
        return tuple(tuple(sorted(i)) for i in inc)

    @property
    def num_robots(self) -> int:
        return sum(self.initial_counts)

    @property
    def initial_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.initial_counts) if c > 0)

    def nodes_with(self, ap: str) -> tuple[int, ...]:
        return tuple(i for i, lab in enumerate(self.labels) if ap in lab)

    # -- transformations -----------------------------------------------------
    def with_robots(self, counts: Mapping[str, int]) -> "TransitionSystem":
        new = [0] * len(self.nodes)
        for name, c in counts.items():
            if name not in self.node_index:
                raise EnvError(f"robot count at unknown node {name!r}")
            new[self.node_index[name]] = int(c)
        return TransitionSystem(self.nodes, self.labels, self.edges, tuple(new), self.ap_universe)

    def masks_over(self, aps) -> tuple[int, ...]:
        """Label bitmasks over ``aps``; propositions outside it are ignored."""
        idx = {a: i for i, a in enumerate(aps)}
        return tuple(sum(1 << idx[a] for a in lab if a in idx) for lab in self.labels)

    def with_alphabet(self, aps: Iterable[str]) -> "TransitionSystem":
        """Same system with label masks taken over a larger proposition universe."""
        universe = tuple(sorted(set(aps) | set(self.ap_universe)))
        return TransitionSystem(self.nodes, self.labels, self.edges, self.initial_counts, universe)

    def without_nodes(self, names: Iterable[str]) -> "TransitionSystem":
        """Drop nodes (and their edges). Robots on dropped nodes are an error."""
        drop = {self.node_index[n] for n in names}
        if any(self.initial_counts[i] for i in drop):
            raise EnvError("cannot remove a node that holds robots")
        keep = [i for i in range(len(self.nodes)) if i not in drop]
        remap = {old: new for new, old in enumerate(keep)}
        edges = tuple(
            (remap[u], remap[v], w) for u, v, w in self.edges if u in remap and v in remap
        )
        return TransitionSystem(
            tuple(self.nodes[i] for i in keep),
            tuple(self.labels[i] for i in keep),
            edges,
            tuple(self.initial_counts[i] for i in keep),
            self.ap_universe,
        )

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": name, "labels": sorted(lab)} for name, lab in zip(self.nodes, self.labels)
            ],
            "edges": [
                {"from": self.nodes[u], "to": self.nodes[v], "weight": format_fraction(w)}
                for u, v, w in self.edges
            ],
            "robots": {
                self.nodes[i]: c for i, c in enumerate(self.initial_counts) if c > 0
            },
        }

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_ts(nodes, edges, robots, ap_universe=()) -> TransitionSystem:
    """Build from python structures.

    ``nodes``: iterable of (name, labels); ``edges``: iterable of (from, to) or
    (from, to, weight); ``robots``: mapping name -> count. Zero-weight self-loops
    are added where missing.
    """
    names: list[str] = []
    labels: list[frozenset[str]] = []
    for name, lab in nodes:
        if name in names:
            raise EnvError(f"duplicate node id {name!r}")
        names.append(name)
        labels.append(frozenset(lab))
    index = {n: i for i, n in enumerate(names)}
    seen: dict[tuple[int, int], Fraction] = {}
    for e in edges:
        if len(e) == 2:
            u, v, w = e[0], e[1], Fraction(1)
        else:
            u, v, w = e[0], e[1], to_fraction(e[2])
        for end in (u, v):
            if end not in index:
                raise EnvError(f"edge references unknown node {end!r}")
        key = (index[u], index[v])
        if key in seen:
            raise EnvError(f"duplicate edge {u}->{v}")
        if w < 0:
            raise EnvError(f"negative weight on {u}->{v}")
        if u == v and w != 0:
            raise EnvError(f"self-loop at {u} must have weight 0")
        seen[key] = w
    for i in range(len(names)):
        seen.setdefault((i, i), Fraction(0))
    counts = [0] * len(names)
    for name, c in dict(robots).items():
        if name not in index:
            raise EnvError(f"robot count at unknown node {name!r}")
        if int(c) != c or c < 0:
            raise EnvError(f"invalid robot count at {name!r}")
        counts[index[name]] = int(c)
    if sum(counts) < 1:
        raise EnvError("at least one robot is required")
    aps = set(ap_universe).union(*labels) if labels else set(ap_universe)
    edge_list = tuple(sorted((u, v, w) for (u, v), w in seen.items()))
    return TransitionSystem(tuple(names), tuple(labels), edge_list, tuple(counts), tuple(sorted(aps)))


def parse_env(text: str) -> TransitionSystem:
    try:
        data = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise EnvError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "nodes" not in data:
        raise EnvError("environment must be an object with 'nodes', 'edges' and 'robots'")
    nodes = []
    for entry in data["nodes"]:
        if "id" not in entry:
            raise EnvError("node entry without 'id'")
        nodes.append((str(entry["id"]), [str(a) for a in entry.get("labels", [])]))
    edges = []
    for entry in data.get("edges", []):
        try:
            u, v = str(entry["from"]), str(entry["to"])
        except KeyError as exc:
            raise EnvError(f"edge entry missing {exc.args[0]!r}") from exc
        edges.append((u, v, entry.get("weight", 1)))
    return build_ts(nodes, edges, data.get("robots", {}))


def team_output(ts: TransitionSystem, placement: Mapping[str, int]) -> frozenset[str]:
    """Union of the labels of all occupied nodes."""
    out: set[str] = set()
    for name, count in placement.items():
        if name not in ts.node_index:
            raise EnvError(f"unknown node {name!r}")
        if count < 0:
            raise EnvError(f"negative count at {name!r}")
        if count > 0:
            out |= ts.labels[ts.node_index[name]]
    return frozenset(out)


def placement_mask(ts: TransitionSystem, counts: Iterable[int]) -> int:
    """Bitmask version of :func:`team_output` over a per-node count vector."""
    mask = 0
    for lab, c in zip(ts.label_masks, counts):
        if c:
            mask |= lab
    return mask
