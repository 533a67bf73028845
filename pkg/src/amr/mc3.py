"""Three-valued CTL model checking over KMTSs.

Every subformula gets two state sets: ``T`` (definitely true, the
pessimistic pass where universal operators range over may-transitions and
existential ones over must-transitions) and ``P`` (possibly true, the
optimistic pass with the roles swapped).  A state is T if it is in ``T``,
F if it is outside ``P``, and U otherwise.

Paths are maximal: either infinite, or finite and ending in a dead end,
i.e. a state with no outgoing transition at all.  A must-path that stops
at a state which still has may-transitions is not maximal.  With this
reading the true and false cases never overlap and definite verdicts are
preserved by abstraction.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Mapping

from . import ctl
from .ctl import (AF, AG, AU, AX, EF, EG, EU, EX, And, FalseF, Formula, Lit, Not, Or,
                  TrueF)
from .models import Kmts, KripkeStructure, Literal, identity_kmts


class ThreeValued(enum.Enum):
    T = "T"
    F = "F"
    U = "U"

    def __invert__(self):
        return {ThreeValued.T: ThreeValued.F, ThreeValued.F: ThreeValued.T}.get(self, self)

    def __and__(self, other):
        if ThreeValued.F in (self, other):
            return ThreeValued.F
        if self is ThreeValued.T and other is ThreeValued.T:
            return ThreeValued.T
        return ThreeValued.U

    def __or__(self, other):
        if ThreeValued.T in (self, other):
            return ThreeValued.T
        if self is ThreeValued.F and other is ThreeValued.F:
            return ThreeValued.F
        return ThreeValued.U

    @property
    def definite(self) -> bool:
        return self is not ThreeValued.U

    def __str__(self):
        return {"T": "true", "F": "false", "U": "undefined"}[self.value]


T, F, U = ThreeValued.T, ThreeValued.F, ThreeValued.U


@dataclass(frozen=True)
class UnknownLiteral:
    prop: str

    def __str__(self):
        return f"UnknownLiteral({self.prop})"


@dataclass(frozen=True)
class MayNotMust:
    edge: tuple[str, str]

    def __str__(self):
        return f"MayNotMust({self.edge[0]} -> {self.edge[1]})"


@dataclass(frozen=True)
class FailureCause:
    """Why an abstract state has an undefined verdict."""

    state: str
    kind: UnknownLiteral | MayNotMust

    def __str__(self):
        return f"{self.kind} at {self.state}"


class UnknownStateError(KeyError):
    pass


# ---------------------------------------------------------------- fixpoints

def _exists_until(states, pred, a, b) -> frozenset:
    """mu Z. b | (a & EX Z) for the relation whose predecessor map is ``pred``."""
    seen = set(b)
    work = deque(s for s in states if s in seen)
    while work:
        t = work.popleft()
        for s in pred[t]:
            if s not in seen and s in a:
                seen.add(s)
                work.append(s)
    return frozenset(seen)


def _forall_until(states, succ, pred, dead, a, b) -> frozenset:
    """mu Z. b | (a & not dead & AX Z)."""
    remaining = {s: len(succ[s]) for s in states}
    seen = set(b)
    work = deque(s for s in states if s in seen)
    while work:
        t = work.popleft()
        for s in pred[t]:
            remaining[s] -= 1
            if remaining[s] == 0 and s not in seen and s in a and s not in dead:
                seen.add(s)
                work.append(s)
    return frozenset(seen)


def _exists_globally(states, succ, pred, dead, a) -> frozenset:
    """nu Z. a & (dead | EX Z): a maximal path staying inside ``a``."""
    z = set(s for s in states if s in a)
    count = {s: sum(1 for t in succ[s] if t in z) for s in z}
    work = deque(s for s in states if s in z and count[s] == 0 and s not in dead)
    while work:
        s = work.popleft()
        if s not in z:
            continue
        z.discard(s)
        for p in pred[s]:
            if p in z:
                count[p] -= 1
                if count[p] == 0 and p not in dead:
                    work.append(p)
    return frozenset(z)


class _Graph:
    """Must and may views of a KMTS with the helper sets the checker needs."""

    def __init__(self, m: Kmts):
        self.m = m
        self.states = m.states
        self.all = frozenset(m.states)
        self.dead = m.dead_ends
        self.ext = _exists_globally(m.states, m.must_succ, m.must_pred, self.dead, self.all)

    def eu(self, mode, a, b):
        pred = self.m.must_pred if mode == "must" else self.m.may_pred
        return _exists_until(self.states, pred, a, b)

    def au_may(self, a, b):
        return _forall_until(self.states, self.m.may_succ, self.m.may_pred, self.dead, a, b)

    def eg(self, mode, a):
        if mode == "must":
            return _exists_globally(self.states, self.m.must_succ, self.m.must_pred, self.dead, a)
        return _exists_globally(self.states, self.m.may_succ, self.m.may_pred, self.dead, a)


def _eval(g: _Graph, phi: Formula, memo: dict) -> tuple[frozenset, frozenset]:
    got = memo.get(phi)
    if got is not None:
        return got
    m = g.m
    S = g.all
    if isinstance(phi, TrueF):
        res = (S, S)
    elif isinstance(phi, FalseF):
        res = (frozenset(), frozenset())
    elif isinstance(phi, Lit):
        p, n = Literal(phi.prop), Literal(phi.prop, True)
        res = (frozenset(s for s in m.states if p in m.labels[s]),
               frozenset(s for s in m.states if n not in m.labels[s]))
    elif isinstance(phi, Not):
        t, p = _eval(g, phi.arg, memo)
        res = (S - p, S - t)
    elif isinstance(phi, And):
        (t1, p1), (t2, p2) = _eval(g, phi.left, memo), _eval(g, phi.right, memo)
        res = (t1 & t2, p1 & p2)
    elif isinstance(phi, Or):
        (t1, p1), (t2, p2) = _eval(g, phi.left, memo), _eval(g, phi.right, memo)
        res = (t1 | t2, p1 | p2)
    elif isinstance(phi, EX):
        t1, p1 = _eval(g, phi.arg, memo)
        res = (frozenset(s for s in m.states if any(x in t1 for x in m.must_succ[s])),
               frozenset(s for s in m.states if any(x in p1 for x in m.may_succ[s])))
    elif isinstance(phi, AX):
        t1, p1 = _eval(g, phi.arg, memo)
        res = (frozenset(s for s in m.states if all(x in t1 for x in m.may_succ[s])),
               frozenset(s for s in m.states if all(x in p1 for x in m.must_succ[s])))
    elif isinstance(phi, EF):
        t1, p1 = _eval(g, phi.arg, memo)
        res = (g.eu("must", S, t1 & g.ext), g.eu("may", S, p1))
    elif isinstance(phi, AG):
        t1, p1 = _eval(g, phi.arg, memo)
        res = (S - g.eu("may", S, S - t1), S - g.eu("must", S, (S - p1) & g.ext))
    elif isinstance(phi, EG):
        t1, p1 = _eval(g, phi.arg, memo)
        res = (g.eg("must", t1), g.eg("may", p1))
    elif isinstance(phi, AF):
        t1, p1 = _eval(g, phi.arg, memo)
        res = (g.au_may(S, t1), S - g.eg("must", S - p1))
    elif isinstance(phi, EU):
        (ta, pa), (tb, pb) = _eval(g, phi.left, memo), _eval(g, phi.right, memo)
        res = (g.eu("must", ta, tb & g.ext), g.eu("may", pa, pb))
    elif isinstance(phi, AU):
        (ta, pa), (tb, pb) = _eval(g, phi.left, memo), _eval(g, phi.right, memo)
        fa, fb = S - pa, S - pb
        false_set = g.eu("must", fb, fa & fb & g.ext) | g.eg("must", fb)
        res = (g.au_may(ta, tb), S - false_set)
    else:
        raise TypeError(f"not a formula: {phi!r}")
    memo[phi] = res
    return res


def _memo_for(m: Kmts) -> tuple[_Graph, dict]:
    cache = m.eval_cache
    if "graph" not in cache:
        cache["graph"] = _Graph(m)
        cache["sets"] = {}
    return cache["graph"], cache["sets"]


def truth_sets(m: Kmts, phi: Formula) -> tuple[frozenset, frozenset]:
    """(definitely-true states, possibly-true states) for ``phi``."""
    g, memo = _memo_for(m)
    return _eval(g, phi, memo)


def value_at(m: Kmts, s: str, phi: Formula) -> ThreeValued:
    t, p = truth_sets(m, phi)
    return T if s in t else (U if s in p else F)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a 3-valued check with the per-subformula valuation."""

    model: Kmts
    state: str
    formula: Formula
    verdict: ThreeValued
    cause: FailureCause | None

    def value(self, phi: Formula, s: str) -> ThreeValued:
        return value_at(self.model, s, phi)

    def table(self) -> Mapping[Formula, Mapping[str, ThreeValued]]:
        return {f: {s: value_at(self.model, s, f) for s in self.model.states}
                for f in ctl.subformulas(self.formula)}


def check3_result(m: Kmts, s: str, phi: Formula) -> CheckResult:
    if s not in m.index:
        raise UnknownStateError(s)
    v = value_at(m, s, phi)
    cause = _Cause(m).find(phi, s) if v is U else None
    return CheckResult(m, s, phi, v, cause)


def check3(m: Kmts, s: str, phi: Formula) -> ThreeValued:
    if s not in m.index:
        raise UnknownStateError(s)
    return value_at(m, s, phi)


def holds(m: Kmts, s: str, phi: Formula) -> bool:
    return check3(m, s, phi) is T


# ---------------------------------------------------------------- 2-valued

def _sat2(m: KripkeStructure, phi: Formula, memo: dict) -> frozenset:
    """Classical CTL labeling on a total Kripke structure."""
    got = memo.get(phi)
    if got is not None:
        return got
    S = frozenset(m.states)
    if isinstance(phi, TrueF):
        res = S
    elif isinstance(phi, FalseF):
        res = frozenset()
    elif isinstance(phi, Lit):
        res = frozenset(s for s in m.states if Literal(phi.prop) in m.labels[s])
    elif isinstance(phi, Not):
        res = S - _sat2(m, phi.arg, memo)
    elif isinstance(phi, And):
        res = _sat2(m, phi.left, memo) & _sat2(m, phi.right, memo)
    elif isinstance(phi, Or):
        res = _sat2(m, phi.left, memo) | _sat2(m, phi.right, memo)
    elif isinstance(phi, EX):
        a = _sat2(m, phi.arg, memo)
        res = frozenset(s for s in m.states if any(t in a for t in m.succ[s]))
    elif isinstance(phi, AX):
        a = _sat2(m, phi.arg, memo)
        res = frozenset(s for s in m.states if all(t in a for t in m.succ[s]))
    elif isinstance(phi, EU):
        res = _exists_until(m.states, m.pred, _sat2(m, phi.left, memo), _sat2(m, phi.right, memo))
    elif isinstance(phi, EF):
        res = _exists_until(m.states, m.pred, S, _sat2(m, phi.arg, memo))
    elif isinstance(phi, EG):
        res = _exists_globally(m.states, m.succ, m.pred, frozenset(), _sat2(m, phi.arg, memo))
    elif isinstance(phi, AG):
        res = S - _exists_until(m.states, m.pred, S, S - _sat2(m, phi.arg, memo))
    elif isinstance(phi, AF):
        res = S - _exists_globally(m.states, m.succ, m.pred, frozenset(), S - _sat2(m, phi.arg, memo))
    elif isinstance(phi, AU):
        a, b = _sat2(m, phi.left, memo), _sat2(m, phi.right, memo)
        res = _forall_until(m.states, m.succ, m.pred, frozenset(), a, b)
    else:
        raise TypeError(f"not a formula: {phi!r}")
    memo[phi] = res
    return res


def check2(m: KripkeStructure, s: str, phi: Formula) -> bool:
    if s not in m.index:
        raise UnknownStateError(s)
    return s in _sat2(m, phi, {})


def check2_all(m: KripkeStructure, phi: Formula) -> frozenset:
    return _sat2(m, phi, {})


def check2_via_kmts(m: KripkeStructure, s: str, phi: Formula) -> ThreeValued:
    return check3(identity_kmts(m), s, phi)


# ---------------------------------------------------------------- paths

def maximal_paths(m: Kmts, start: str, mode: str = "may", limit: int | None = None) -> Iterator[tuple[str, ...]]:
    """Paths from ``start`` using each transition at most once.

    A path ends when its last state has no unused outgoing transition of
    the given mode.  Paths come out in depth-first order following the
    declared state order.
    """
    succ = m.succ(mode)
    used: set[tuple[str, str]] = set()
    path = [start]

    def walk(s):
        extended = False
        for t in succ[s]:
            if (s, t) in used:
                continue
            extended = True
            used.add((s, t))
            path.append(t)
            yield from walk(t)
            path.pop()
            used.discard((s, t))
        if not extended:
            yield tuple(path)

    for n, p in enumerate(walk(start)):
        if limit is not None and n >= limit:
            return
        yield p


def find_lasso(m: Kmts, start: str, mode: str, allowed) -> tuple[str, ...] | None:
    """A maximal path from ``start`` that stays inside ``allowed``.

    Returns ``None`` when no such path exists.  Otherwise the result is
    either a simple path ending in a dead end, or a simple path followed
    by one repeated state closing a cycle.
    """
    g, _ = _memo_for(m)
    inside = g.eg(mode, frozenset(allowed))
    if start not in inside:
        return None
    succ = m.succ(mode)
    path = [start]
    on_path = {start}
    cur = start
    while cur not in m.dead_ends:
        options = [t for t in succ[cur] if t in inside]
        fresh = [t for t in options if t not in on_path]
        if fresh:
            cur = fresh[0]
            path.append(cur)
            on_path.add(cur)
        else:
            path.append(options[0])
            break
    return tuple(path)


def reachable(m: Kmts, start: str, mode: str, through=None) -> list[str]:
    """States reachable from ``start`` (inclusive) in breadth-first order.

    With ``through`` given, only states inside it are expanded.
    """
    succ = m.succ(mode)
    seen = {start}
    order = [start]
    work = deque([start])
    while work:
        s = work.popleft()
        if through is not None and s not in through:
            continue
        for t in succ[s]:
            if t not in seen:
                seen.add(t)
                order.append(t)
                work.append(t)
    return order


# ---------------------------------------------------------------- causes

class _Cause:
    """Locate a may-not-must edge or unknown literal behind a U verdict.

    The search follows the subformula that is undefined, preferring a
    may-only edge into a state whose verdict is definite and would flip
    the result if the edge became a must edge (or vanished).
    """

    def __init__(self, m: Kmts):
        self.m = m
        self.visited: set = set()

    def v(self, phi, s):
        return value_at(self.m, s, phi)

    def may_only(self, s):
        return [t for t in self.m.may_succ[s] if (s, t) not in self.m.must]

    def edge_to(self, s, phi, want):
        for t in self.may_only(s):
            if self.v(phi, t) is want:
                return FailureCause(s, MayNotMust((s, t)))
        return None

    def into_unknown(self, s, phi):
        for t in self.m.may_succ[s]:
            if self.v(phi, t) is U:
                c = self.find(phi, t)
                if c is not None:
                    return c
        return None

    def stuck(self, s):
        """Cause for a state that has no maximal must-path."""
        for u in reachable(self.m, s, "must"):
            if not self.m.must_succ[u] and self.m.may_succ[u]:
                return FailureCause(u, MayNotMust((u, self.m.may_succ[u][0])))
        return None

    def any_edge(self, s):
        for t in self.may_only(s):
            return FailureCause(s, MayNotMust((s, t)))
        return None

    def first(self, *options):
        for opt in options:
            c = opt()
            if c is not None:
                return c
        return None

    def find(self, phi: Formula, s: str) -> FailureCause | None:
        key = (phi, s)
        if key in self.visited:
            return None
        self.visited.add(key)
        if isinstance(phi, Lit):
            return FailureCause(s, UnknownLiteral(phi.prop))
        if isinstance(phi, Not):
            return self.find(phi.arg, s)
        if isinstance(phi, (And, Or)):
            for c in (phi.left, phi.right):
                if self.v(c, s) is U:
                    got = self.find(c, s)
                    if got is not None:
                        return got
            return None
        if isinstance(phi, EX):
            return self.first(lambda: self.edge_to(s, phi.arg, T),
                              lambda: self.into_unknown(s, phi.arg))
        if isinstance(phi, AX):
            return self.first(lambda: self.edge_to(s, phi.arg, F),
                              lambda: self.into_unknown(s, phi.arg))
        if isinstance(phi, (AG, EF, EG, AF)):
            a = phi.arg
            va = self.v(a, s)
            if va is U:
                got = self.find(a, s)
                if got is not None:
                    return got
            # the value the whole formula takes along a successor that
            # would settle the verdict at s
            want = {AG: F, EF: T, EG: T, AF: F}[type(phi)]
            settled_here = (isinstance(phi, AG) and va is F) or (isinstance(phi, EF) and va is T)
            if settled_here:
                return self.first(lambda: self.stuck(s), lambda: self.any_edge(s))
            return self.first(lambda: self.edge_to(s, phi, want),
                              lambda: self.into_unknown(s, phi),
                              lambda: self.stuck(s),
                              lambda: self.any_edge(s))
        if isinstance(phi, (AU, EU)):
            va, vb = self.v(phi.left, s), self.v(phi.right, s)
            if vb is U:
                got = self.find(phi.right, s)
                if got is not None:
                    return got
            if va is U:
                got = self.find(phi.left, s)
                if got is not None:
                    return got
            if isinstance(phi, EU) and vb is T:
                return self.first(lambda: self.stuck(s), lambda: self.any_edge(s))
            if isinstance(phi, AU) and va is F and vb is F:
                return self.first(lambda: self.stuck(s), lambda: self.any_edge(s))
            want = T if isinstance(phi, EU) else F
            return self.first(lambda: self.edge_to(s, phi, want),
                              lambda: self.into_unknown(s, phi),
                              lambda: self.stuck(s),
                              lambda: self.any_edge(s))
        return None
