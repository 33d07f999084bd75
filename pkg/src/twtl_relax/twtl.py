"""Time Window Temporal Logic: AST, parser, time norm and reference semantics.

The reference semantics work on words given as sequences of sets of
proposition names and are deliberately independent of the automaton code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

__all__ = [
    "Hold", "And", "Or", "Concat", "Within", "Formula", "TwtlSyntaxError",
    "parse_twtl", "norm", "end_times", "satisfies", "propositions", "to_text",
]


class TwtlSyntaxError(ValueError):
    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        if pos is not None and text is not None:
            message = f"{message} at position {pos}\n  {text}\n  {' ' * pos}^"
        elif pos is not None:
            message = f"{message} at position {pos}"
        super().__init__(message)


@dataclass(frozen=True)
class Hold:
    d: int
    prop: str | None  # None is the constant true

    def __str__(self):
        return f"H^{self.d} {self.prop}" if self.prop is not None else f"H^{self.d}"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Concat:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Within:
    inner: "Formula"
    a: int
    b: int


Formula = Union[Hold, And, Or, Concat, Within]


@lru_cache(maxsize=None)
def norm(f: Formula) -> int:
    """Number of unit steps spanned by a satisfying execution."""
    if isinstance(f, Hold):
        return f.d
    if isinstance(f, (And, Or)):
        return max(norm(f.lhs), norm(f.rhs))
    if isinstance(f, Concat):
        return norm(f.lhs) + norm(f.rhs) + 1
    if isinstance(f, Within):
        return f.b
    raise TypeError(f"not a formula: {f!r}")


def propositions(f: Formula) -> frozenset[str]:
    if isinstance(f, Hold):
        return frozenset() if f.prop is None else frozenset([f.prop])
    if isinstance(f, Within):
        return propositions(f.inner)
    return propositions(f.lhs) | propositions(f.rhs)


def depth(f: Formula) -> int:
    if isinstance(f, Hold):
        return 0
    if isinstance(f, Within):
        return 1 + depth(f.inner)
    return 1 + max(depth(f.lhs), depth(f.rhs))


_PREC = {Concat: 0, Or: 1, And: 2}
_OPS = {Concat: " . ", Or: " | ", And: " & "}


def to_text(f: Formula, parent: int = -1) -> str:
    """Render in the concrete syntax accepted by :func:`parse_twtl`."""
    if isinstance(f, Hold):
        return str(f)
    if isinstance(f, Within):
        return f"[{to_text(f.inner)}]^[{f.a},{f.b}]"
    prec = _PREC[type(f)]
    # left-associative: the right operand needs parentheses at equal precedence
    text = to_text(f.lhs, prec - 1) + _OPS[type(f)] + to_text(f.rhs, prec)
    return f"({text})" if prec <= parent else text


# -- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<hold>H\^(?P<d>\d+))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>\d+)
  | (?P<neg>!|~|¬)
  | (?P<op>&&|\|\||[&|.\[\]()^,∧∨·])
    """,
    re.VERBOSE,
)
_ALIASES = {"&&": "&", "||": "|", "∧": "&", "∨": "|", "·": "."}


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise TwtlSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind == "d":
            kind = "hold"
        if kind == "neg":
            raise TwtlSyntaxError("negation is not supported", pos, text)
        if kind == "hold":
            out.append(("hold", int(m.group("d")), pos))
        elif kind == "ident":
            out.append(("ident", m.group("ident"), pos))
        elif kind == "int":
            out.append(("int", int(m.group("int")), pos))
        elif kind == "op":
            op = m.group("op")
            out.append(("op", _ALIASES.get(op, op), pos))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return TwtlSyntaxError(msg, tok[2], self.text)

    def expect(self, value):
        tok = self.take()
        if tok[0] != "op" or tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}", tok)
        return tok

    def is_op(self, value):
        tok = self.peek()
        return tok[0] == "op" and tok[1] == value

    def parse(self) -> Formula:
        f = self.concat()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}")
        return f

    def concat(self):
        f = self.disj()
        while self.is_op("."):
            self.take()
            f = Concat(f, self.disj())
        return f

    def disj(self):
        f = self.conj()
        while self.is_op("|"):
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.atom()
        while self.is_op("&"):
            self.take()
            f = And(f, self.atom())
        return f

    def atom(self):
        tok = self.take()
        kind, val, pos = tok
        if kind == "hold":
            nxt = self.peek()
            if nxt[0] == "ident":
                self.take()
                return Hold(val, _prop(nxt[1]))
            return Hold(val, None)
        if kind == "ident":
            # bare proposition: shorthand for H^0 p
            return Hold(0, _prop(val))
        if kind == "op" and val == "(":
            f = self.concat()
            self.expect(")")
            return f
        if kind == "op" and val == "[":
            inner = self.concat()
            self.expect("]")
            self.expect("^")
            self.expect("[")
            a = self._int()
            self.expect(",")
            b = self._int()
            self.expect("]")
            if a > b:
                raise TwtlSyntaxError(f"window [{a},{b}] has a > b", pos, self.text)
            if b - a < norm(inner):
                raise TwtlSyntaxError(
                    f"window [{a},{b}] is shorter than the enclosed formula (norm {norm(inner)})",
                    pos,
                    self.text,
                )
            return Within(inner, a, b)
        found = "end of input" if kind == "end" else repr(val)
        raise self.error(f"expected a formula, found {found}", tok)

    def _int(self):
        tok = self.take()
        if tok[0] != "int":
            raise self.error("expected a non-negative integer", tok)
        return tok[1]


def _prop(name: str) -> str | None:
    return None if name in ("true", "TRUE", "True") else name


def parse_twtl(text: str) -> Formula:
    """Parse the ASCII concrete syntax.

    Precedence from tightest: atoms and windows, ``&``, ``|``, ``.``; binary
    operators associate to the left.

    >>> parse_twtl("[H^2 A & H^3 B]^[0,5] . [H^1 C]^[0,1]")
    Concat(lhs=Within(inner=And(lhs=Hold(d=2, prop='A'), rhs=Hold(d=3, prop='B')), a=0, b=5), rhs=Within(inner=Hold(d=1, prop='C'), a=0, b=1))
    """
    return _Parser(text).parse()


# -- reference semantics ---------------------------------------------------

Word = Sequence[frozenset]


def end_times(f: Formula, word: Word, k: int = 0) -> frozenset[int]:
    """Indices at which ``f``, started at ``k``, completes on ``word``."""
    w = tuple(frozenset(s) for s in word)
    return _end(f, w, k)


@lru_cache(maxsize=1 << 18)
def _end(f: Formula, w: tuple, k: int) -> frozenset[int]:
    n = len(w)
    if k < 0 or k >= n:
        return frozenset()
    if isinstance(f, Hold):
        last = k + f.d
        if last >= n:
            return frozenset()
        if f.prop is not None and not all(f.prop in w[j] for j in range(k, last + 1)):
            return frozenset()
        return frozenset([last])
    if isinstance(f, And):
        left = _end(f.lhs, w, k)
        if not left:
            return frozenset()
        right = _end(f.rhs, w, k)
        return frozenset(max(e1, e2) for e1 in left for e2 in right)
    if isinstance(f, Or):
        return _end(f.lhs, w, k) | _end(f.rhs, w, k)
    if isinstance(f, Concat):
        out: set[int] = set()
        for e in _end(f.lhs, w, k):
            out |= _end(f.rhs, w, e + 1)
        return frozenset(out)
    if isinstance(f, Within):
        deadline = k + f.b
        if deadline >= n:
            return frozenset()
        latest = k + f.b - norm(f.inner)
        for j in range(k + f.a, latest + 1):
            if _end(f.inner, w, j):
                return frozenset([deadline])
        return frozenset()
    raise TypeError(f"not a formula: {f!r}")


def satisfies(word: Word, f: Formula) -> bool:
    """True iff ``f`` started at 0 completes somewhere inside ``word``."""
    return bool(end_times(f, word, 0))
