"""CTL syntax: AST, parser, printer, positive normal form, mr-CTL test.

Concrete grammar (lowest precedence first)::

    phi  ::= or ("->" phi)?
    or   ::= and ("|" and)*
    and  ::= un ("&" un)*
    un   ::= "!" un | ("AX"|"EX"|"AF"|"EF"|"AG"|"EG") un | atom
    atom ::= "true" | "false" | ident | "(" phi ")"
           | "A[" phi "U" phi "]" | "E[" phi "U" phi "]"

``a -> b`` is sugar for ``!a | b``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .models import Literal


class Formula:
    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class TrueF(Formula):
    def __repr__(self):
        return "True"


@dataclass(frozen=True, repr=False)
class FalseF(Formula):
    def __repr__(self):
        return "False"


@dataclass(frozen=True, repr=False)
class Lit(Formula):
    prop: str

    def __repr__(self):
        return f"Lit({self.prop})"


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula

    def __repr__(self):
        return f"Not({self.arg!r})"


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def __repr__(self):
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def __repr__(self):
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Unary(Formula):
    arg: Formula
    op = ""

    def __repr__(self):
        return f"{self.op}({self.arg!r})"


class AX(Unary):
    op = "AX"


class EX(Unary):
    op = "EX"


class AF(Unary):
    op = "AF"


class EF(Unary):
    op = "EF"


class AG(Unary):
    op = "AG"


class EG(Unary):
    op = "EG"


@dataclass(frozen=True, repr=False)
class Until(Formula):
    left: Formula
    right: Formula
    op = ""

    def __repr__(self):
        return f"{self.op}({self.left!r}, {self.right!r})"


class AU(Until):
    op = "AU"


class EU(Until):
    op = "EU"


TRUE = TrueF()
FALSE = FalseF()
UNARY = {"AX": AX, "EX": EX, "AF": AF, "EF": EF, "AG": AG, "EG": EG}
TEMPORAL = (Unary, Until)


def lit(lit_: Literal) -> Formula:
    return Not(Lit(lit_.prop)) if lit_.negated else Lit(lit_.prop)


def as_literal(phi: Formula) -> Literal | None:
    """The literal a formula denotes, if it is ``p`` or ``!p``."""
    if isinstance(phi, Lit):
        return Literal(phi.prop)
    if isinstance(phi, Not) and isinstance(phi.arg, Lit):
        return Literal(phi.arg.prop, True)
    return None


def children(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, (Not, Unary)):
        return (phi.arg,)
    if isinstance(phi, (And, Or, Until)):
        return (phi.left, phi.right)
    return ()


def subformulas(phi: Formula) -> list[Formula]:
    """Distinct subformulas, children before parents."""
    out: list[Formula] = []
    seen = set()

    def walk(f):
        if f in seen:
            return
        for c in children(f):
            walk(c)
        seen.add(f)
        out.append(f)

    walk(phi)
    return out


def size(phi: Formula) -> int:
    return 1 + sum(size(c) for c in children(phi))


def depth(phi: Formula) -> int:
    cs = children(phi)
    return 1 + max((depth(c) for c in cs), default=0)


def props_of(phi: Formula) -> set[str]:
    if isinstance(phi, Lit):
        return {phi.prop}
    out: set[str] = set()
    for c in children(phi):
        out |= props_of(c)
    return out


# ---------------------------------------------------------------- parsing

class CtlSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int, expected: frozenset[str] = frozenset()):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{line}:{column}: {message}{detail}")


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<quant>[AE])\[
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<sym>[!&|()\]])
""", re.VERBOSE)

_KEYWORDS = {"true", "false", "U", *UNARY}


@dataclass(frozen=True)
class _Tok:
    kind: str  # literal token text for symbols/keywords, "ident", or "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i, line, line_start = 0, 1, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise CtlSyntaxError(f"unexpected character {text[i]!r}", line, i - line_start + 1)
        col = i - line_start + 1
        kind = m.lastgroup
        val = m.group(0)
        if kind == "ws":
            for j, ch in enumerate(val):
                if ch == "\n":
                    line += 1
                    line_start = i + j + 1
        elif kind == "quant":
            toks.append(_Tok(val, val, line, col))
        elif kind == "ident":
            toks.append(_Tok(val if val in _KEYWORDS else "ident", val, line, col))
        else:
            toks.append(_Tok(val, val, line, col))
        i = m.end()
    toks.append(_Tok("eof", "", line, len(text) - line_start + 1))
    return toks


_ATOM_START = frozenset({"true", "false", "ident", "(", "A[", "E["})
_UNARY_START = frozenset({"!", *UNARY}) | _ATOM_START


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            self.fail(frozenset({kind}))
        self.i += 1
        return t

    def fail(self, expected):
        t = self.peek()
        what = "end of input" if t.kind == "eof" else repr(t.text)
        raise CtlSyntaxError(f"unexpected {what}", t.line, t.col, frozenset(expected))

    def formula(self) -> Formula:
        left = self.disj()
        if self.peek().kind == "->":
            self.i += 1
            return Or(Not(left), self.formula())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek().kind == "|":
            self.i += 1
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.peek().kind == "&":
            self.i += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        t = self.peek()
        if t.kind == "!":
            self.i += 1
            return Not(self.unary())
        if t.kind in UNARY:
            self.i += 1
            return UNARY[t.kind](self.unary())
        return self.atom()

    def atom(self) -> Formula:
        t = self.peek()
        if t.kind == "true":
            self.i += 1
            return TRUE
        if t.kind == "false":
            self.i += 1
            return FALSE
        if t.kind == "ident":
            self.i += 1
            return Lit(t.text)
        if t.kind == "(":
            self.i += 1
            f = self.formula()
            if self.peek().kind != ")":
                self.fail({")", "&", "|", "->"})
            self.i += 1
            return f
        if t.kind in ("A[", "E["):
            self.i += 1
            left = self.formula()
            if self.peek().kind != "U":
                self.fail({"U", "&", "|", "->"})
            self.i += 1
            right = self.formula()
            if self.peek().kind != "]":
                self.fail({"]", "&", "|", "->"})
            self.i += 1
            return AU(left, right) if t.kind == "A[" else EU(left, right)
        self.fail(_UNARY_START)


def parse_ctl(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    if p.peek().kind != "eof":
        p.fail({"&", "|", "->", "end of input"})
    return f


# ---------------------------------------------------------------- printing

_PREC = {Or: 1, And: 2}


def _prec(phi: Formula) -> int:
    return _PREC.get(type(phi), 3)


def to_text(phi: Formula) -> str:
    if isinstance(phi, TrueF):
        return "true"
    if isinstance(phi, FalseF):
        return "false"
    if isinstance(phi, Lit):
        return phi.prop
    if isinstance(phi, Not):
        return "!" + _wrap(phi.arg, 3)
    if isinstance(phi, Unary):
        return phi.op + " " + _wrap(phi.arg, 3)
    if isinstance(phi, Until):
        return f"{phi.op[0]}[{to_text(phi.left)} U {to_text(phi.right)}]"
    sym = " & " if isinstance(phi, And) else " | "
    p = _prec(phi)
    # left-associative: a right operand of equal precedence needs parentheses
    return _wrap(phi.left, p) + sym + _wrap(phi.right, p + 1)


def _wrap(phi: Formula, min_prec: int) -> str:
    s = to_text(phi)
    return s if _prec(phi) >= min_prec else f"({s})"


# ---------------------------------------------------------------- normal form

def to_pnf(phi: Formula) -> Formula:
    """Push negations down to propositions.

    Negated untils have no dual operator in the repair algorithm, so they
    are expanded: !A[a U b] becomes E[!b U (!a & !b)] | EG !b and
    !E[a U b] becomes A[!b U (!a & !b)] | AG !b.
    """
    return _pnf(phi, False)


@lru_cache(maxsize=4096)
def _pnf(phi: Formula, negate: bool) -> Formula:
    if isinstance(phi, TrueF):
        return FALSE if negate else TRUE
    if isinstance(phi, FalseF):
        return TRUE if negate else FALSE
    if isinstance(phi, Lit):
        return Not(phi) if negate else phi
    if isinstance(phi, Not):
        return _pnf(phi.arg, not negate)
    if isinstance(phi, And):
        l, r = _pnf(phi.left, negate), _pnf(phi.right, negate)
        return Or(l, r) if negate else And(l, r)
    if isinstance(phi, Or):
        l, r = _pnf(phi.left, negate), _pnf(phi.right, negate)
        return And(l, r) if negate else Or(l, r)
    if isinstance(phi, Unary):
        arg = _pnf(phi.arg, negate)
        if not negate:
            return type(phi)(arg)
        dual = {AX: EX, EX: AX, AG: EF, EF: AG, EG: AF, AF: EG}[type(phi)]
        return dual(arg)
    if isinstance(phi, Until):
        if not negate:
            return type(phi)(_pnf(phi.left, False), _pnf(phi.right, False))
        na, nb = _pnf(phi.left, True), _pnf(phi.right, True)
        if isinstance(phi, AU):
            return Or(EU(nb, And(na, nb)), EG(nb))
        return Or(AU(nb, And(na, nb)), AG(nb))
    raise TypeError(f"not a formula: {phi!r}")


def is_pnf(phi: Formula) -> bool:
    if isinstance(phi, Not):
        return isinstance(phi.arg, Lit)
    return all(is_pnf(c) for c in children(phi))


def _is_prop_level(phi: Formula) -> bool:
    """Propositional part of mr-CTL: constants, p, negation and disjunction."""
    if isinstance(phi, (TrueF, FalseF, Lit)):
        return True
    if isinstance(phi, Not):
        return _is_prop_level(phi.arg) or _is_mr_temporal(phi.arg)
    if isinstance(phi, Or):
        return is_mr_ctl(phi.left) and is_mr_ctl(phi.right)
    return False


def _is_mr_temporal(phi: Formula) -> bool:
    if isinstance(phi, Unary):
        return as_literal(phi.arg) is not None
    if isinstance(phi, Until):
        return as_literal(phi.left) is not None and as_literal(phi.right) is not None
    return False


def is_mr_ctl(phi: Formula) -> bool:
    """Membership in the fragment for which repair is complete.

    Temporal operators may only be applied to literals, there is no
    conjunction and no nesting of path quantifiers.
    """
    return _is_prop_level(phi) or _is_mr_temporal(phi)


def iter_temporal(phi: Formula) -> Iterator[Formula]:
    for f in subformulas(phi):
        if isinstance(f, TEMPORAL):
            yield f
