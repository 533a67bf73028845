"""Brute-force reference implementations used only by the tests.

Nothing here shares code with the library beyond the data types.  The
semantic oracle enumerates every maximal path of a small KMTS as a
lasso (simple prefix plus a back edge) or as a simple path into a dead
end, and evaluates the path clauses literally.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from amr.ctl import (AF, AG, AU, AX, EF, EG, EU, EX, And, FalseF, Lit, Not, Or, TrueF)
from amr.models import Kmts, KripkeStructure, Literal

TV_T, TV_F, TV_U = "T", "F", "U"


def _kleene_not(v):
    return {TV_T: TV_F, TV_F: TV_T}.get(v, TV_U)


class PathOracle:
    def __init__(self, m: Kmts):
        self.m = m
        self.edges = {"must": set(m.must), "may": set(m.may)}
        self.paths_cache = {}

    def succ(self, s, mode):
        return [t for t in self.m.states if (s, t) in self.edges[mode]]

    def dead(self, s):
        return not self.succ(s, "may")

    def paths(self, s, mode):
        """All maximal paths as (states, infinite) with states unrolled.

        Infinite lassos are unrolled twice around the loop so that every
        position pattern that matters for the clauses appears.
        """
        key = (s, mode)
        if key in self.paths_cache:
            return self.paths_cache[key]
        out = []

        def grow(path):
            last = path[-1]
            if self.dead(last):
                out.append((tuple(path), False))
                return
            for t in self.succ(last, mode):
                if t in path:
                    i = path.index(t)
                    loop = path[i:]
                    out.append((tuple(path + loop + loop), True))
                else:
                    grow(path + [t])
            # a non-dead state without successors in this mode ends no
            # maximal path: nothing is recorded

        grow([s])
        self.paths_cache[key] = out
        return out

    @lru_cache(maxsize=None)
    def val(self, phi, s):
        m = self.m
        if isinstance(phi, TrueF):
            return TV_T
        if isinstance(phi, FalseF):
            return TV_F
        if isinstance(phi, Lit):
            lab = m.labels[s]
            if Literal(phi.prop) in lab:
                return TV_T
            if Literal(phi.prop, True) in lab:
                return TV_F
            return TV_U
        if isinstance(phi, Not):
            return _kleene_not(self.val(phi.arg, s))
        if isinstance(phi, And):
            a, b = self.val(phi.left, s), self.val(phi.right, s)
            if TV_F in (a, b):
                return TV_F
            return TV_T if a == b == TV_T else TV_U
        if isinstance(phi, Or):
            a, b = self.val(phi.left, s), self.val(phi.right, s)
            if TV_T in (a, b):
                return TV_T
            return TV_F if a == b == TV_F else TV_U
        if isinstance(phi, AX):
            if all(self.val(phi.arg, t) == TV_T for t in self.succ(s, "may")):
                return TV_T
            if any(self.val(phi.arg, t) == TV_F for t in self.succ(s, "must")):
                return TV_F
            return TV_U
        if isinstance(phi, EX):
            if any(self.val(phi.arg, t) == TV_T for t in self.succ(s, "must")):
                return TV_T
            if all(self.val(phi.arg, t) == TV_F for t in self.succ(s, "may")):
                return TV_F
            return TV_U
        may = self.paths(s, "may")
        must = self.paths(s, "must")
        v = lambda f, x: self.val(f, x)  # noqa: E731
        if isinstance(phi, AG):
            a = phi.arg
            if all(all(v(a, x) == TV_T for x in p) for p, _ in may):
                return TV_T
            if any(any(v(a, x) == TV_F for x in p) for p, _ in must):
                return TV_F
            return TV_U
        if isinstance(phi, EG):
            a = phi.arg
            if any(all(v(a, x) == TV_T for x in p) for p, _ in must):
                return TV_T
            if all(any(v(a, x) == TV_F for x in p) for p, _ in may):
                return TV_F
            return TV_U
        if isinstance(phi, AF):
            a = phi.arg
            if all(any(v(a, x) == TV_T for x in p) for p, _ in may):
                return TV_T
            if any(all(v(a, x) == TV_F for x in p) for p, _ in must):
                return TV_F
            return TV_U
        if isinstance(phi, EF):
            a = phi.arg
            if any(any(v(a, x) == TV_T for x in p) for p, _ in must):
                return TV_T
            if all(all(v(a, x) == TV_F for x in p) for p, _ in may):
                return TV_F
            return TV_U
        if isinstance(phi, (AU, EU)):
            a, b = phi.left, phi.right

            def until_true(p):
                for i, x in enumerate(p):
                    if v(b, x) == TV_T and all(v(a, y) == TV_T for y in p[:i]):
                        return True
                return False

            def until_false(p, infinite):
                for k, x in enumerate(p):
                    if all(v(a, y) != TV_F for y in p[:k]) and v(b, x) != TV_F:
                        return False
                if all(v(b, x) != TV_F for x in p) and not infinite:
                    return False
                return True

            if isinstance(phi, AU):
                if all(until_true(p) for p, _ in may):
                    return TV_T
                if any(until_false(p, inf) for p, inf in must):
                    return TV_F
                return TV_U
            if any(until_true(p) for p, _ in must):
                return TV_T
            if all(until_false(p, inf) for p, inf in may):
                return TV_F
            return TV_U
        raise TypeError(phi)


def oracle_check3(m: Kmts, s: str, phi) -> str:
    return PathOracle(m).val(phi, s)


def oracle_abstract(m: KripkeStructure, blocks: dict[str, list[str]]):
    """Direct quantifier evaluation of the abstraction conditions."""
    alpha = {s: b for b, mem in blocks.items() for s in mem}
    must, may = set(), set()
    for b1, g1 in blocks.items():
        for b2, g2 in blocks.items():
            if any((x, y) in m.trans for x in g1 for y in g2):
                may.add((b1, b2))
            if all(any((x, y) in m.trans for y in g2) for x in g1):
                must.add((b1, b2))
    labels = {}
    for b, g in blocks.items():
        common = None
        for x in g:
            common = set(m.labels[x]) if common is None else common & set(m.labels[x])
        labels[b] = common or set()
    init = {b for b, g in blocks.items() if any(x in m.initial for x in g)}
    return init, must, may, labels, alpha


def all_edge_sets(pairs):
    pairs = list(pairs)
    for r in range(len(pairs) + 1):
        for combo in itertools.combinations(pairs, r):
            yield set(combo)


def _matches(k: KripkeStructure, blocks, target: Kmts) -> bool:
    init, must, may, labels, _ = oracle_abstract(k, blocks)
    return (init == set(target.initial) and must == set(target.must) and may == set(target.may)
            and all(labels[b] == set(target.labels[b]) for b in blocks))


def edge_realisations(m: KripkeStructure, blocks: dict[str, list[str]], edge, target: Kmts):
    """Every total KS that differs from ``m`` only on the block pair of
    ``edge`` and abstracts to ``target``."""
    g1, g2 = blocks[edge[0]], blocks[edge[1]]
    pairs = [(a, b) for a in g1 for b in g2]
    fixed = {e for e in m.trans if e not in set(pairs)}
    for chosen in all_edge_sets(pairs):
        trans = fixed | chosen
        if not all(any(a == s for a, _ in trans) for s in m.states):
            continue
        k = KripkeStructure(m.props, m.states, m.initial, trans, m.labels)
        if _matches(k, blocks, target):
            yield k


def concretization_bound(kind: str, n: int) -> tuple[int, int]:
    """Allowed range of d for one concretized operation on an n-state KS."""
    if kind in ("AddMay", "AddState"):
        return 1, 1
    if kind == "RemoveMay":
        return 1, n * n
    return 1, n


def label_realisations(m: KripkeStructure, blocks: dict[str, list[str]], block: str, target: Kmts):
    """Every relabelling of the members of ``block`` that abstracts to ``target``."""
    full = [[Literal(p, bool(bits >> i & 1)) for i, p in enumerate(m.props)]
            for bits in range(2 ** len(m.props))]
    members = blocks[block]
    for choice in itertools.product(full, repeat=len(members)):
        labels = dict(m.labels)
        labels.update({s: set(lab) for s, lab in zip(members, choice)})
        k = KripkeStructure(m.props, m.states, m.initial, m.trans, labels)
        if _matches(k, blocks, target):
            yield k
