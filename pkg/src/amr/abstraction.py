"""Abstraction of a Kripke structure into a KMTS and the way back.

``abstract`` builds the KMTS for a partition: a block is initial if one of
its members is, carries the literals all members agree on, has a must
edge to another block when every member has a successor there and a may
edge when some member does.

``concretize_min`` turns one basic repair operation on the abstraction
into the concrete models closest to the original one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .models import AbstractionMap, Kmts, KripkeStructure, Literal
from .ops import (AddMay, AddMust, AddState, ChangeLabel, RemoveMay, RemoveMust,
                  RemoveState, apply_basic_op, relabel)
from .metrics import distance_ks


class PartitionError(ValueError):
    pass


class ConcretizationError(ValueError):
    pass


def check_partition(m: KripkeStructure, p: AbstractionMap):
    problems = p.problems(m.states)
    if problems:
        raise PartitionError("; ".join(problems))


def abstract(m: KripkeStructure, p: AbstractionMap) -> Kmts:
    check_partition(m, p)
    alpha = p.alpha
    names = p.names
    may = {(alpha[a], alpha[b]) for a, b in m.trans}
    succ_blocks = {s: {alpha[t] for t in m.succ[s]} for s in m.states}
    must = set()
    labels = {}
    initial = set()
    for name, members in p.blocks:
        common = set(succ_blocks[members[0]])
        lab = set(m.labels[members[0]])
        for s in members[1:]:
            common &= succ_blocks[s]
            lab &= m.labels[s]
        must.update((name, b) for b in common)
        labels[name] = lab
        if any(s in m.initial for s in members):
            initial.add(name)
    sizes = {name: len(members) for name, members in p.blocks}
    return Kmts(m.props, names, initial, must, may, labels, sizes)


def _label_key(m: KripkeStructure, s: str):
    return tuple(sorted(m.labels[s]))


def default_partition(m: KripkeStructure, prefix: str = "s_hat") -> AbstractionMap:
    """Group states with identical labels, in order of first appearance."""
    classes: dict = {}
    for s in m.states:
        classes.setdefault(_label_key(m, s), []).append(s)
    return AbstractionMap([(f"{prefix}{i}", members) for i, members in enumerate(classes.values())])


def singleton_partition(m: KripkeStructure) -> AbstractionMap:
    return AbstractionMap([(s, [s]) for s in m.states])


def alpha_relation(p: AbstractionMap) -> set[tuple[str, str]]:
    return {(s, b) for b, members in p.blocks for s in members}


@dataclass(frozen=True)
class SimulationResult:
    ok: bool
    clause: int | None = None
    pair: tuple[str, str] | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def mixed_simulation(m: KripkeStructure, mh: Kmts, h: Iterable[tuple[str, str]]) -> SimulationResult:
    """Check the three mixed-simulation clauses for every pair in ``h``.

    1. the abstract label is contained in the concrete one;
    2. every concrete step is matched by a may step into a related state;
    3. every must step is matched by a concrete step into a related state.
    """
    h = set(h)
    related: dict[str, set[str]] = {}
    for s, a in h:
        related.setdefault(s, set()).add(a)
    for s, a in sorted(h, key=lambda x: (m.index.get(x[0], -1), mh.index.get(x[1], -1))):
        if s not in m.index or a not in mh.index:
            return SimulationResult(False, 0, (s, a), "pair references an unknown state")
        if not mh.labels[a] <= m.labels[s]:
            extra = sorted(mh.labels[a] - m.labels[s])
            return SimulationResult(False, 1, (s, a), f"abstract literals {', '.join(map(str, extra))} missing")
        for t in m.succ[s]:
            if not any((a, b) in mh.may for b in related.get(t, ())):
                return SimulationResult(False, 2, (s, a), f"step {s} -> {t} has no may match")
        for b in mh.must_succ[a]:
            if not any(b in related.get(t, ()) for t in m.succ[s]):
                return SimulationResult(False, 3, (s, a), f"must step {a} => {b} has no concrete match")
    return SimulationResult(True)


def in_concretization(m: KripkeStructure, p: AbstractionMap, mh: Kmts) -> bool:
    """Membership of ``m`` in the set of models the KMTS stands for.

    Initial states lie in initial blocks and every initial block has an
    initial member, every abstract literal holds in each member, every
    concrete step follows a may edge, and every must edge is realised from
    each member of its source block.
    """
    if p.problems(m.states) or set(p.names) != set(mh.states):
        return False
    alpha, gamma = p.alpha, p.gamma
    for s in m.initial:
        if alpha[s] not in mh.initial:
            return False
    for b in mh.initial:
        if not any(s in m.initial for s in gamma[b]):
            return False
    for s in m.states:
        if not mh.labels[alpha[s]] <= m.labels[s]:
            return False
    for a, b in m.trans:
        if (alpha[a], alpha[b]) not in mh.may:
            return False
    for a, b in mh.must:
        targets = set(gamma[b])
        if not all(targets & set(m.succ[s]) for s in gamma[a]):
            return False
    return True


# ---------------------------------------------------------------- K_min

def _ks(m: KripkeStructure, *, states=None, initial=None, trans=None, labels=None) -> KripkeStructure:
    return KripkeStructure(m.props, m.states if states is None else states,
                           m.initial if initial is None else initial,
                           m.trans if trans is None else trans,
                           m.labels if labels is None else labels)


def partition_after(p: AbstractionMap, op) -> AbstractionMap:
    """The partition once ``op`` has been realised concretely."""
    if isinstance(op, AddState):
        return AbstractionMap(list(p.blocks) + [(op.state, (op.state,))])
    if isinstance(op, RemoveState):
        return AbstractionMap([(b, mem) for b, mem in p.blocks if b != op.state])
    return p


@dataclass(frozen=True)
class Candidate:
    model: KripkeStructure
    valid: bool
    reason: str = ""


def _lost_totality(before: KripkeStructure, after: KripkeStructure) -> list[str]:
    return [s for s in after.states if before.succ.get(s) and not after.succ[s]]


def concretization_candidates(m: KripkeStructure, p: AbstractionMap, op) -> list[Candidate]:
    """Every single-choice concrete realisation of ``op``.

    Choices that would leave some state without successors are kept but
    marked invalid.
    """
    gamma = p.gamma
    out: list[KripkeStructure] = []
    if isinstance(op, AddMust):
        b1, b2 = op.edge
        g2 = set(gamma[b2])
        lacking = [s for s in gamma[b1] if not g2 & set(m.succ[s])]
        for s2 in gamma[b2]:
            out.append(_ks(m, trans=m.trans | {(s1, s2) for s1 in lacking}))
    elif isinstance(op, AddMay):
        b1, b2 = op.edge
        for s1 in gamma[b1]:
            for s2 in gamma[b2]:
                if (s1, s2) not in m.trans:
                    out.append(_ks(m, trans=m.trans | {(s1, s2)}))
    elif isinstance(op, RemoveMust):
        b1, b2 = op.edge
        g2 = set(gamma[b2])
        for s1 in gamma[b1]:
            gone = {(s1, t) for t in m.succ[s1] if t in g2}
            out.append(_ks(m, trans=m.trans - gone))
    elif isinstance(op, RemoveMay):
        b1, b2 = op.edge
        g1, g2 = set(gamma[b1]), set(gamma[b2])
        out.append(_ks(m, trans={e for e in m.trans if not (e[0] in g1 and e[1] in g2)}))
    elif isinstance(op, ChangeLabel):
        labels = dict(m.labels)
        for s in gamma[op.state]:
            labels[s] = relabel(m.labels[s], op.literals)
        out.append(_ks(m, labels=labels))
    elif isinstance(op, AddState):
        if op.state in m.index:
            raise ConcretizationError(f"{op}: concrete state {op.state} already exists")
        labels = dict(m.labels)
        labels[op.state] = frozenset()  # pending until a later relabeling
        out.append(_ks(m, states=m.states + (op.state,), labels=labels))
    elif isinstance(op, RemoveState):
        gone = set(gamma[op.state])
        out.append(_ks(m, states=tuple(s for s in m.states if s not in gone),
                       initial=m.initial - gone,
                       trans={e for e in m.trans if e[0] not in gone and e[1] not in gone},
                       labels={s: v for s, v in m.labels.items() if s not in gone}))
    else:
        raise ConcretizationError(f"unknown operation {op!r}")
    seen = set()
    result = []
    for k in out:
        key = k.key()
        if key in seen:
            continue
        seen.add(key)
        broken = _lost_totality(m, k)
        result.append(Candidate(k, not broken, f"no successor left at {', '.join(broken)}" if broken else ""))
    return result


def concretize_min(m: KripkeStructure, p: AbstractionMap, op, mh_after: Kmts | None = None) -> list[KripkeStructure]:
    """K_min: the valid realisations of ``op`` at minimum distance from ``m``.

    If ``mh_after`` is given it must equal the abstraction with ``op``
    applied; a mismatch is an error.  The result may be empty when every
    choice breaks totality.
    """
    check_partition(m, p)
    if mh_after is not None:
        expected = apply_basic_op(abstract(m, p), op)
        if expected != mh_after:
            raise ConcretizationError(f"{op}: KMTS does not match the abstraction of the model")
    valid = [c.model for c in concretization_candidates(m, p, op) if c.valid]
    if not valid:
        return []
    dists = [distance_ks(m, k) for k in valid]
    best = min(dists)
    return [k for k, d in zip(valid, dists) if d == best]


def resolve_pending(m: KripkeStructure, fresh: Iterable[str], mh: Kmts | None = None,
                    p: AbstractionMap | None = None) -> KripkeStructure:
    """Give fresh concrete states a full labeling.

    Literals come from the abstract block when known; propositions still
    undecided default to false.
    """
    labels = dict(m.labels)
    for s in fresh:
        if s not in labels:
            continue
        lab = set(labels[s])
        if mh is not None and p is not None and s in p.alpha:
            lab |= mh.labels.get(p.alpha[s], frozenset())
        for q in m.props:
            if Literal(q) not in lab and Literal(q, True) not in lab:
                lab.add(Literal(q, True))
        labels[s] = frozenset(lab)
    return _ks(m, labels=labels)
