"""Concrete and abstract transition systems.

A :class:`KripkeStructure` is the concrete model: a total transition
relation and a full labeling over the declared propositions.  A
:class:`Kmts` (Kripke modal transition system) is the abstract model with
separate must and may relations and a partial labeling.

All values are immutable.  State order is the declared order and every
iteration downstream follows it, which keeps results reproducible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
FRESH_RE = re.compile(r"_n[0-9]+\Z")

Edge = tuple[str, str]


@dataclass(frozen=True, order=True)
class Literal:
    prop: str
    negated: bool = False

    def __post_init__(self):
        if not IDENT_RE.match(self.prop):
            raise ValueError(f"invalid proposition name {self.prop!r}")

    def negate(self) -> "Literal":
        return Literal(self.prop, not self.negated)

    def __str__(self):
        return ("!" if self.negated else "") + self.prop


def pos(p: str) -> Literal:
    return Literal(p, False)


def neg(p: str) -> Literal:
    return Literal(p, True)


def _freeze_labels(states, labels) -> Mapping[str, frozenset]:
    out = {}
    for s in states:
        out[s] = frozenset(labels.get(s, ()))
    return MappingProxyType(out)


def _succ_map(states, edges) -> Mapping[str, tuple[str, ...]]:
    index = {s: i for i, s in enumerate(states)}
    succ: dict[str, list[str]] = {s: [] for s in states}
    for a, b in edges:
        if a in succ and b in index:
            succ[a].append(b)
    return MappingProxyType({s: tuple(sorted(v, key=index.__getitem__)) for s, v in succ.items()})


def _pred_map(states, edges) -> Mapping[str, tuple[str, ...]]:
    return _succ_map(states, [(b, a) for a, b in edges])


@dataclass(frozen=True, eq=False)
class KripkeStructure:
    """Concrete model (S, S0, R, L) over the propositions ``props``."""

    props: tuple[str, ...]
    states: tuple[str, ...]
    initial: frozenset[str]
    trans: frozenset[Edge]
    labels: Mapping[str, frozenset[Literal]]

    def __init__(self, props: Iterable[str], states: Iterable[str], initial: Iterable[str],
                 trans: Iterable[Edge], labels: Mapping[str, Iterable[Literal]]):
        states = tuple(states)
        object.__setattr__(self, "props", tuple(props))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "initial", frozenset(initial))
        object.__setattr__(self, "trans", frozenset((a, b) for a, b in trans))
        object.__setattr__(self, "labels", _freeze_labels(states, labels))

    @cached_property
    def index(self) -> Mapping[str, int]:
        return MappingProxyType({s: i for i, s in enumerate(self.states)})

    @cached_property
    def succ(self) -> Mapping[str, tuple[str, ...]]:
        return _succ_map(self.states, self.trans)

    @cached_property
    def pred(self) -> Mapping[str, tuple[str, ...]]:
        return _pred_map(self.states, self.trans)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.trans, key=lambda e: (self.index.get(e[0], -1), self.index.get(e[1], -1)))

    def holds(self, s: str, lit: Literal) -> bool:
        return lit in self.labels[s]

    def key(self):
        """Hashable canonical form, used for equality and de-duplication."""
        return (self.props, self.states, tuple(sorted(self.initial)), tuple(self.sorted_edges()),
                tuple((s, tuple(sorted(self.labels[s]))) for s in self.states))

    def __eq__(self, other):
        return isinstance(other, KripkeStructure) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"KripkeStructure(states={len(self.states)}, trans={len(self.trans)})"


@dataclass(frozen=True, eq=False)
class Kmts:
    """Abstract model (Ŝ, Ŝ0, R_must, R_may, L̂).

    ``sizes`` records |γ(ŝ)| for states built by abstraction.  Missing
    entries mean a single concrete state.  It only matters for the
    AddMay / RemoveMust couplings and is ignored by equality and distance.
    """

    props: tuple[str, ...]
    states: tuple[str, ...]
    initial: frozenset[str]
    must: frozenset[Edge]
    may: frozenset[Edge]
    labels: Mapping[str, frozenset[Literal]]
    sizes: Mapping[str, int] = field(default_factory=dict)

    def __init__(self, props: Iterable[str], states: Iterable[str], initial: Iterable[str],
                 must: Iterable[Edge], may: Iterable[Edge],
                 labels: Mapping[str, Iterable[Literal]], sizes: Mapping[str, int] | None = None):
        states = tuple(states)
        object.__setattr__(self, "props", tuple(props))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "initial", frozenset(initial))
        object.__setattr__(self, "must", frozenset((a, b) for a, b in must))
        object.__setattr__(self, "may", frozenset((a, b) for a, b in may))
        object.__setattr__(self, "labels", _freeze_labels(states, labels))
        sizes = {s: n for s, n in (sizes or {}).items() if s in set(states) and n != 1}
        object.__setattr__(self, "sizes", MappingProxyType(sizes))

    @cached_property
    def index(self) -> Mapping[str, int]:
        return MappingProxyType({s: i for i, s in enumerate(self.states)})

    @cached_property
    def must_succ(self) -> Mapping[str, tuple[str, ...]]:
        return _succ_map(self.states, self.must)

    @cached_property
    def may_succ(self) -> Mapping[str, tuple[str, ...]]:
        return _succ_map(self.states, self.may)

    @cached_property
    def must_pred(self) -> Mapping[str, tuple[str, ...]]:
        return _pred_map(self.states, self.must)

    @cached_property
    def may_pred(self) -> Mapping[str, tuple[str, ...]]:
        return _pred_map(self.states, self.may)

    @cached_property
    def dead_ends(self) -> frozenset[str]:
        """States without any outgoing transition."""
        return frozenset(s for s in self.states if not self.may_succ[s])

    @cached_property
    def eval_cache(self) -> dict:
        # per-instance memo for the model checker; models are immutable
        return {}

    def size_of(self, s: str) -> int:
        return self.sizes.get(s, 1)

    def succ(self, mode: str) -> Mapping[str, tuple[str, ...]]:
        return self.must_succ if mode == "must" else self.may_succ

    def sorted_edges(self, edges: Iterable[Edge]) -> list[Edge]:
        return sorted(edges, key=lambda e: (self.index.get(e[0], -1), self.index.get(e[1], -1)))

    def value(self, s: str, lit: Literal):
        """True / False / None (unknown) for a literal at a state."""
        lab = self.labels[s]
        if lit in lab:
            return True
        if lit.negate() in lab:
            return False
        return None

    def key(self):
        return (self.props, self.states, tuple(sorted(self.initial)),
                tuple(self.sorted_edges(self.must)), tuple(self.sorted_edges(self.may)),
                tuple((s, tuple(sorted(self.labels[s]))) for s in self.states))

    def __eq__(self, other):
        return isinstance(other, Kmts) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Kmts(states={len(self.states)}, must={len(self.must)}, may={len(self.may)})"


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str

    def __str__(self):
        return f"{self.kind}: {self.where}"


def _common_violations(m, edges_by_name) -> list[Violation]:
    out = []
    seen = set()
    for s in m.states:
        if not IDENT_RE.match(s):
            out.append(Violation("invalid state id", s))
        if s in seen:
            out.append(Violation("duplicate state", s))
        seen.add(s)
    for p in m.props:
        if not IDENT_RE.match(p):
            out.append(Violation("invalid proposition", p))
    for s in sorted(m.initial):
        if s not in seen:
            out.append(Violation("initial state not declared", s))
    for name, edges in edges_by_name:
        for a, b in sorted(edges):
            if a not in seen or b not in seen:
                out.append(Violation(f"{name} edge references undeclared state", f"{a} -> {b}"))
    props = set(m.props)
    for s in m.states:
        for lit in sorted(m.labels.get(s, ())):
            if lit.prop not in props:
                out.append(Violation("label uses undeclared proposition", f"{s}: {lit}"))
    return out


def validate_ks(m: KripkeStructure) -> list[Violation]:
    """Every invariant violation of a concrete model; an empty list means ok."""
    out = _common_violations(m, [("transition", m.trans)])
    for s in m.states:
        if not m.succ[s]:
            out.append(Violation("not total at state", s))
    for s in m.states:
        lab = m.labels[s]
        for p in m.props:
            has_p, has_n = Literal(p) in lab, Literal(p, True) in lab
            if has_p and has_n:
                out.append(Violation("both p and !p", f"{s}: {p}"))
            elif not has_p and not has_n:
                out.append(Violation("proposition unlabeled", f"{s}: {p}"))
    return out


def validate_kmts(m: Kmts) -> list[Violation]:
    out = _common_violations(m, [("must", m.must), ("may", m.may)])
    for a, b in m.sorted_edges(m.must - m.may):
        out.append(Violation("must edge missing from may", f"{a} -> {b}"))
    for s in m.states:
        lab = m.labels[s]
        for p in m.props:
            if Literal(p) in lab and Literal(p, True) in lab:
                out.append(Violation("both p and !p", f"{s}: {p}"))
    return out


def identity_kmts(m: KripkeStructure) -> Kmts:
    """View a concrete model as a KMTS with must = may = R."""
    return Kmts(m.props, m.states, m.initial, m.trans, m.trans, dict(m.labels))


@dataclass(frozen=True, eq=False)
class AbstractionMap:
    """Partition of concrete states into named blocks.

    ``blocks`` keeps block order; ``alpha`` and ``gamma`` are derived.
    """

    blocks: tuple[tuple[str, tuple[str, ...]], ...]

    def __init__(self, blocks):
        items = blocks.items() if isinstance(blocks, Mapping) else blocks
        object.__setattr__(self, "blocks", tuple((name, tuple(members)) for name, members in items))

    @cached_property
    def gamma(self) -> Mapping[str, tuple[str, ...]]:
        return MappingProxyType(dict(self.blocks))

    @cached_property
    def alpha(self) -> Mapping[str, str]:
        return MappingProxyType({s: name for name, members in self.blocks for s in members})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __eq__(self, other):
        return isinstance(other, AbstractionMap) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def problems(self, states: Iterable[str]) -> list[str]:
        states = list(states)
        out = []
        seen: dict[str, str] = {}
        names = set()
        for name, members in self.blocks:
            if name in names:
                out.append(f"duplicate block name {name}")
            names.add(name)
            if not members:
                out.append(f"empty block {name}")
            for s in members:
                if s in seen:
                    out.append(f"state {s} in blocks {seen[s]} and {name}")
                seen[s] = name
        universe = set(states)
        for s in states:
            if s not in seen:
                out.append(f"state {s} not covered")
        for s in seen:
            if s not in universe:
                out.append(f"unknown state {s}")
        return out
