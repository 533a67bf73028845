"""The seven basic repair operations on a KMTS."""

from __future__ import annotations

from dataclasses import dataclass

from .models import FRESH_RE, Edge, Kmts, Literal


class InapplicableOp(ValueError):
    pass


def _fmt_edge(e: Edge, arrow: str) -> str:
    return f"{e[0]} {arrow} {e[1]}"


class _Op:
    def __repr__(self):
        return str(self)


@dataclass(frozen=True, repr=False)
class AddMust(_Op):
    edge: Edge
    kind = "AddMust"

    def __str__(self):
        return f"AddMust({_fmt_edge(self.edge, '=>')})"


@dataclass(frozen=True, repr=False)
class AddMay(_Op):
    edge: Edge
    kind = "AddMay"

    def __str__(self):
        return f"AddMay({_fmt_edge(self.edge, '->')})"


@dataclass(frozen=True, repr=False)
class RemoveMust(_Op):
    edge: Edge
    kind = "RemoveMust"

    def __str__(self):
        return f"RemoveMust({_fmt_edge(self.edge, '=>')})"


@dataclass(frozen=True, repr=False)
class RemoveMay(_Op):
    edge: Edge
    kind = "RemoveMay"

    def __str__(self):
        return f"RemoveMay({_fmt_edge(self.edge, '->')})"


@dataclass(frozen=True, repr=False)
class ChangeLabel(_Op):
    state: str
    literals: frozenset[Literal]
    kind = "ChangeLabel"

    def __init__(self, state: str, literals):
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "literals", frozenset(literals))

    def __str__(self):
        lits = ", ".join(str(x) for x in sorted(self.literals))
        return f"ChangeLabel({self.state}, {{{lits}}})"


@dataclass(frozen=True, repr=False)
class AddState(_Op):
    state: str
    kind = "AddState"

    def __str__(self):
        return f"AddState({self.state})"


@dataclass(frozen=True, repr=False)
class RemoveState(_Op):
    state: str
    kind = "RemoveState"

    def __str__(self):
        return f"RemoveState({self.state})"


BasicRepairOp = AddMust | AddMay | RemoveMust | RemoveMay | ChangeLabel | AddState | RemoveState
OP_KINDS = ("AddMust", "AddMay", "RemoveMust", "RemoveMay", "ChangeLabel", "AddState", "RemoveState")


def relabel(label: frozenset[Literal], lits: frozenset[Literal]) -> frozenset[Literal]:
    """L ∪ φ minus the complements of φ's literals."""
    return frozenset((set(label) | set(lits)) - {x.negate() for x in lits})


def fresh_state(m: Kmts) -> str:
    taken = set(m.states)
    i = 0
    while f"_n{i}" in taken:
        i += 1
    return f"_n{i}"


def _need_state(m: Kmts, s: str):
    if s not in m.index:
        raise InapplicableOp(f"unknown state {s}")


def apply_basic_op(m: Kmts, op) -> Kmts:
    """Apply one operation, enforcing its applicability conditions."""
    must, may = set(m.must), set(m.may)
    labels = dict(m.labels)
    states, initial, sizes = list(m.states), set(m.initial), dict(m.sizes)
    if isinstance(op, (AddMust, AddMay, RemoveMust, RemoveMay)):
        a, b = op.edge
        _need_state(m, a)
        _need_state(m, b)
    if isinstance(op, AddMust):
        if op.edge in must:
            raise InapplicableOp(f"{op}: already a must transition")
        must.add(op.edge)
        may.add(op.edge)
    elif isinstance(op, AddMay):
        if op.edge in may:
            raise InapplicableOp(f"{op}: already a may transition")
        may.add(op.edge)
        if m.size_of(op.edge[0]) == 1:
            must.add(op.edge)
    elif isinstance(op, RemoveMust):
        if op.edge not in must:
            raise InapplicableOp(f"{op}: not a must transition")
        must.discard(op.edge)
        if m.size_of(op.edge[0]) == 1:
            may.discard(op.edge)
    elif isinstance(op, RemoveMay):
        if op.edge not in may:
            raise InapplicableOp(f"{op}: not a may transition")
        may.discard(op.edge)
        must.discard(op.edge)
    elif isinstance(op, ChangeLabel):
        _need_state(m, op.state)
        for x in op.literals:
            if x.prop not in m.props:
                raise InapplicableOp(f"{op}: unknown proposition {x.prop}")
            if x.negate() in op.literals:
                raise InapplicableOp(f"{op}: contradictory literals")
        new = relabel(m.labels[op.state], op.literals)
        if new == m.labels[op.state]:
            raise InapplicableOp(f"{op}: label already contains the literals")
        labels[op.state] = new
    elif isinstance(op, AddState):
        if op.state in m.index:
            raise InapplicableOp(f"{op}: state exists")
        if not FRESH_RE.match(op.state):
            raise InapplicableOp(f"{op}: new states must use the reserved _n<k> ids")
        states.append(op.state)
        labels[op.state] = frozenset()
    elif isinstance(op, RemoveState):
        _need_state(m, op.state)
        s = op.state
        if any(s in e for e in may):
            raise InapplicableOp(f"{op}: the state being removed must be isolated")
        states.remove(s)
        initial.discard(s)
        labels.pop(s)
        sizes.pop(s, None)
    else:
        raise InapplicableOp(f"unknown operation {op!r}")
    return Kmts(m.props, states, initial, must, may, labels, sizes)


# tier from the concrete distance bound: d = 1, d <= |S|, d <= |S|^2
_TIER = {"AddMay": 0, "AddState": 0, "AddMust": 1, "RemoveMust": 1, "ChangeLabel": 1,
         "RemoveState": 1, "RemoveMay": 2}
# relative cost of applying the operation to a KMTS; RemoveState has to
# scan the transitions to confirm isolation
_COST = {"AddMay": 1, "AddState": 1, "AddMust": 1, "RemoveMust": 1, "ChangeLabel": 1,
         "RemoveState": 2, "RemoveMay": 1}


def op_tier(kind: str) -> int:
    return _TIER[kind]


def precedes(a: str, b: str) -> bool:
    """Strict partial order: ``a`` is preferred to ``b``."""
    return _TIER[a] < _TIER[b]


def op_ordering() -> list[list[str]]:
    """Operation kinds grouped by tier, each tier sorted by cost then name."""
    tiers: dict[int, list[str]] = {}
    for k in OP_KINDS:
        tiers.setdefault(_TIER[k], []).append(k)
    return [sorted(v, key=lambda k: (_COST[k], k)) for _, v in sorted(tiers.items())]


def linear_order() -> list[str]:
    return [k for tier in op_ordering() for k in tier]
