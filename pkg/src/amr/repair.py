"""Repair of a KMTS against a CTL property, and the end-to-end pipeline.

``abstract_repair`` dispatches on the shape of the formula to one primitive
per operator.  Every primitive works on a model plus the list of basic
operations applied so far, so a successful repair also yields its trace.
A candidate model is accepted only when it satisfies the goal at the
target state and every constraint; otherwise the search moves on.

``run_pipeline`` abstracts a Kripke structure, refines until the verdict
is definite, repairs the abstraction and maps the repair back to the
closest concrete models.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from . import ctl
from .abstraction import (abstract, concretize_min, default_partition, partition_after,
                          resolve_pending, singleton_partition)
from .ctl import AF, AG, AU, AX, EF, EG, EU, EX, And, FalseF, Formula, Or, TrueF
from .mc3 import ThreeValued, check2, check3, find_lasso, maximal_paths, reachable, truth_sets
from .metrics import distance_kmts, distance_ks
from .models import AbstractionMap, Kmts, KripkeStructure, validate_ks
from .ops import (OP_KINDS, AddMay, AddMust, AddState, BasicRepairOp, ChangeLabel,
                  InapplicableOp, RemoveMay, RemoveMust, RemoveState, apply_basic_op,
                  fresh_state, linear_order, op_ordering, op_tier, precedes)
from .refinement import refine_until_definite

__all__ = [
    "AddMust", "AddMay", "RemoveMust", "RemoveMay", "ChangeLabel", "AddState", "RemoveState",
    "BasicRepairOp", "OP_KINDS", "InapplicableOp", "apply_basic_op", "op_ordering", "op_tier",
    "precedes", "linear_order", "Constraint", "Failure", "RepairOutcome", "RepairContractError",
    "abstract_repair", "repair_atomic", "repair_or", "repair_and", "repair_ag", "repair_ex",
    "repair_ax", "repair_eg", "repair_af", "repair_ef", "repair_au", "repair_eu",
    "run_pipeline", "PipelineReport", "ConcreteRepair",
]

# how many maximal paths EG examines, and how many concrete models the
# pipeline carries from one trace step to the next
PATH_LIMIT = 64
CANDIDATE_LIMIT = 256


@dataclass(frozen=True)
class Constraint:
    state: str
    formula: Formula

    def __str__(self):
        return f"({self.state}, {ctl.to_text(self.formula)})"


@dataclass(frozen=True)
class Failure:
    reason: str = ""

    def __bool__(self):
        return False


class RepairContractError(ValueError):
    """The inputs break the preconditions of a repair call."""


@dataclass
class RepairOutcome:
    repaired: Kmts
    trace: list
    constraints: tuple[Constraint, ...]
    d_hat: int
    concretizations: list = field(default_factory=list)


# ---------------------------------------------------------------- search state

@dataclass(frozen=True)
class _Work:
    m: Kmts
    trace: tuple = ()

    def apply(self, op) -> "_Work | None":
        try:
            return _Work(apply_basic_op(self.m, op), self.trace + (op,))
        except InapplicableOp:
            return None


class _Ctx:
    def __init__(self, max_depth: int):
        self.max_depth = max_depth
        self.depth = 0
        self.rejected = 0   # results a primitive returned that failed re-verification
        self.exhausted = False


def _holds(m: Kmts, s: str, phi: Formula) -> bool:
    return s in m.index and check3(m, s, phi) is ThreeValued.T


def _sat_c(m: Kmts, cs: Iterable[Constraint]) -> bool:
    return all(_holds(m, c.state, c.formula) for c in cs)


def _true_set(m: Kmts, phi: Formula) -> frozenset:
    return truth_sets(m, phi)[0]


def _accept(w: _Work | None, s: str, goal: Formula, cs) -> _Work | None:
    if w is not None and _holds(w.m, s, goal) and _sat_c(w.m, cs):
        return w
    return None


def _repair(w: _Work, s: str, phi: Formula, cs: tuple, ctx: _Ctx) -> _Work | None:
    if _holds(w.m, s, phi):
        return w if _sat_c(w.m, cs) else None
    if ctx.depth >= ctx.max_depth:
        ctx.exhausted = True
        return None
    ctx.depth += 1
    try:
        out = _dispatch(w, s, phi, cs, ctx)
    finally:
        ctx.depth -= 1
    if out is not None and _accept(out, s, phi, cs) is None:
        ctx.rejected += 1
        return None
    return out


def _dispatch(w, s, phi, cs, ctx):
    if isinstance(phi, FalseF):
        return None
    if isinstance(phi, TrueF):
        return w
    if ctl.as_literal(phi) is not None:
        return _atomic(w, s, phi, cs, ctx)
    handler = _HANDLERS.get(type(phi))
    if handler is None:
        raise RepairContractError(f"formula is not in positive normal form: {ctl.to_text(phi)}")
    return handler(w, s, phi, cs, ctx)


def _closer(base: Kmts, a: _Work | None, b: _Work | None) -> _Work | None:
    """MinimallyChanged: the result nearer to ``base``; ties go to ``a``."""
    if a is None or b is None:
        return a or b
    return a if distance_kmts(base, a.m) <= distance_kmts(base, b.m) else b


# ---------------------------------------------------------------- primitives

def _atomic(w, s, phi, cs, ctx):
    return _accept(w.apply(ChangeLabel(s, {ctl.as_literal(phi)})), s, phi, cs)


def _or(w, s, phi, cs, ctx):
    left = _repair(w, s, phi.left, cs, ctx)
    right = _repair(w, s, phi.right, cs, ctx)
    return _closer(w.m, _accept(left, s, phi, cs), _accept(right, s, phi, cs))


def _and(w, s, phi, cs, ctx):
    def attempt(first, second):
        r = _repair(w, s, first, cs, ctx)
        if r is None:
            return None
        return _repair(r, s, second, cs + (Constraint(s, first),), ctx)
    return _closer(w.m, attempt(phi.left, phi.right), attempt(phi.right, phi.left))


def _ag(w, s, phi, cs, ctx):
    phi1 = phi.arg
    cur = w
    if not _holds(cur.m, s, phi1):
        cur = _repair(cur, s, phi1, cs, ctx)
        if cur is None:
            return None
    # each round repairs the first violating state in breadth-first order;
    # a repair can expose new reachable states, hence the loop
    for _ in range(4 * len(cur.m.states) + 8):
        good = _true_set(cur.m, phi1)
        bad = [t for t in reachable(cur.m, s, "may") if t not in good]
        if not bad:
            return _accept(cur, s, phi, cs)
        cur = _repair(cur, bad[0], phi1, cs, ctx)
        if cur is None:
            return None
    return None


def _new_state(w: _Work) -> tuple[_Work, str]:
    n = fresh_state(w.m)
    return w.apply(AddState(n)), n


def _chain(w: _Work | None, *ops) -> _Work | None:
    for op in ops:
        if w is None:
            return None
        w = w.apply(op)
    return w


def _ex(w, s, phi, cs, ctx):
    phi1 = phi.arg
    m = w.m
    good = _true_set(m, phi1)
    for t in m.states:
        if t in good:
            got = _accept(w.apply(AddMust((s, t))), s, phi, cs)
            if got:
                return got
    for t in m.must_succ[s]:
        if t not in good:
            got = _accept(_repair(w, t, phi1, cs, ctx), s, phi, cs)
            if got:
                return got
    w1, n = _new_state(w)
    w1 = _chain(w1, AddMust((s, n)), AddMay((n, n)))
    if w1 is None:
        return None
    return _accept(_repair(w1, n, phi1, cs, ctx), s, phi, cs)


def _ax(w, s, phi, cs, ctx):
    phi1 = phi.arg
    # first try to repair every may-successor in turn
    cur = w
    for t in w.m.may_succ[s]:
        if not _holds(cur.m, t, phi1):
            cur = _repair(cur, t, phi1, cs, ctx)
            if cur is None:
                break
    got = _accept(cur, s, phi, cs)
    if got:
        return got
    # otherwise drop the offending may-transitions
    cur = w
    for t in w.m.may_succ[s]:
        if not _holds(cur.m, t, phi1):
            cur = cur.apply(RemoveMay((s, t)))
            if cur is None:
                return None
    if cur.m.may_succ[s]:
        return _accept(cur, s, phi, cs)
    # no successor left: point s at a state that satisfies phi1
    good = _true_set(cur.m, phi1)
    for t in cur.m.states:
        if t in good:
            got = _accept(cur.apply(AddMay((s, t))), s, phi, cs)
            if got:
                return got
    w1, n = _new_state(cur)
    w1 = _chain(w1, AddMay((n, n)))
    if w1 is None:
        return None
    r = _repair(w1, n, phi1, cs, ctx)
    if r is None:
        return None
    return _accept(r.apply(AddMay((s, n))), s, phi, cs)


def _eg(w, s, phi, cs, ctx):
    phi1 = phi.arg
    m1 = w
    if not _holds(m1.m, s, phi1):
        m1 = _repair(m1, s, phi1, cs, ctx)
        if m1 is None:
            return None
    # hook s onto a state that already starts a phi1 path
    good = _true_set(m1.m, phi)
    for t in m1.m.states:
        if t in good:
            got = _accept(m1.apply(AddMust((s, t))), s, phi, cs)
            if got:
                return got
    # repair phi1 along an existing must path
    good1 = _true_set(m1.m, phi1)
    for path in maximal_paths(m1.m, s, "must", limit=PATH_LIMIT):
        cur = m1
        for t in dict.fromkeys(path):
            if t not in good1:
                cur = _repair(cur, t, phi1, cs, ctx)
                if cur is None:
                    break
        got = _accept(cur, s, phi, cs)
        if got:
            return got
    w1, n = _new_state(m1)
    r = _repair(w1, n, phi1, cs, ctx)
    if r is None:
        return None
    r = r.apply(AddMust((s, n)))
    if r is not None and n in r.m.dead_ends:
        r = r.apply(AddMust((n, n)))
    return _accept(r, s, phi, cs)


def _af(w, s, phi, cs, ctx):
    phi1 = phi.arg
    cur = w
    for _ in range(4 * len(w.m.states) + 8):
        good = _true_set(cur.m, phi1)
        path = find_lasso(cur.m, s, "may", set(cur.m.states) - good)
        if path is None:
            return _accept(cur, s, phi, cs)
        for t in dict.fromkeys(path):
            r = _repair(cur, t, phi1, cs, ctx)
            if r is not None:
                cur = r
                break
        else:
            return None
    return None


def _ef(w, s, phi, cs, ctx):
    phi1 = phi.arg
    m = w.m
    good = _true_set(m, phi1)
    sources = [t for t in reachable(m, s, "must") if t == s or t not in good]
    for si in sources:
        for sk in m.states:
            if sk in good:
                got = _accept(w.apply(AddMust((si, sk))), s, phi, cs)
                if got:
                    return got
    for si in sources:
        if si not in good:
            got = _accept(_repair(w, si, phi1, cs, ctx), s, phi, cs)
            if got:
                return got
    w1, n = _new_state(w)
    r = _repair(w1, n, phi1, cs, ctx)
    if r is None:
        return None
    for si in sources:
        cand = r.apply(AddMust((si, n)))
        if cand is not None and n in cand.m.dead_ends:
            cand = cand.apply(AddMust((n, n)))
        got = _accept(cand, s, phi, cs)
        if got:
            return got
    return None


def _au_witness(m: Kmts, s: str, phi: AU) -> list[str] | None:
    """A may-path from ``s`` along which A[phi1 U phi2] fails, or None."""
    t1, t2 = _true_set(m, phi.left), _true_set(m, phi.right)
    ok = _true_set(m, phi)
    if s in ok:
        return None
    path, on_path = [s], {s}
    cur = s
    while cur in t1 and cur not in m.dead_ends:
        nxt = [t for t in m.may_succ[cur] if t not in ok]
        if not nxt:
            break
        fresh = [t for t in nxt if t not in on_path]
        if not fresh:
            break
        cur = fresh[0]
        path.append(cur)
        on_path.add(cur)
    return [t for t in path if t not in t2]


def _au(w, s, phi, cs, ctx):
    m1 = w
    if not _holds(m1.m, s, phi.left):
        m1 = _repair(m1, s, phi.left, cs, ctx)
        if m1 is None:
            return None
    for _ in range(4 * len(w.m.states) + 8):
        bad = _au_witness(m1.m, s, phi)
        if bad is None:
            return _accept(m1, s, phi, cs)
        # cut the path as late as possible; s itself is the last resort
        order = [t for t in reversed(bad) if t != s] + [t for t in bad if t == s]
        for t in order:
            r = _repair(m1, t, phi.right, cs, ctx)
            if r is not None:
                m1 = r
                break
        else:
            return None
    return None


def _eu(w, s, phi, cs, ctx):
    m1 = w
    if not _holds(m1.m, s, phi.left):
        m1 = _repair(m1, s, phi.left, cs, ctx)
        if m1 is None:
            return None
    t1, t2 = _true_set(m1.m, phi.left), _true_set(m1.m, phi.right)
    ends = [t for t in reachable(m1.m, s, "must", through=t1) if t in t1]
    for sm in ends:
        for sj in m1.m.states:
            if sj in t2:
                got = _accept(m1.apply(AddMust((sm, sj))), s, phi, cs)
                if got:
                    return got
    w1, n = _new_state(m1)
    r = _repair(w1, n, phi.right, cs, ctx)
    if r is None:
        return None
    r = r.apply(AddMust((s, n)))
    if r is not None and n in r.m.dead_ends:
        r = r.apply(AddMust((n, n)))
    return _accept(r, s, phi, cs)


_HANDLERS: dict[type, Callable] = {
    Or: _or, And: _and, AG: _ag, EX: _ex, AX: _ax, EG: _eg, AF: _af, EF: _ef, AU: _au, EU: _eu,
}


# ---------------------------------------------------------------- public API

def _budget(m: Kmts, phi: Formula) -> int:
    return len(m.states) * ctl.size(phi) + 8


def _prepare(m: Kmts, s: str, phi: Formula, constraints) -> tuple[Formula, tuple]:
    if s not in m.index:
        raise RepairContractError(f"unknown state {s}")
    phi = ctl.to_pnf(phi)
    cs = tuple(constraints or ())
    for c in cs:
        if not _holds(m, c.state, c.formula):
            raise RepairContractError(f"constraint {c} does not hold before the repair")
    if _holds(m, s, phi):
        raise RepairContractError(f"{ctl.to_text(phi)} already holds at {s}; nothing to repair")
    return phi, cs


def abstract_repair(m: Kmts, s: str, phi: Formula, constraints=()) -> RepairOutcome | Failure:
    """Repair ``m`` so that ``phi`` is definitely true at ``s``.

    Raises ``RepairContractError`` if ``phi`` already holds or a constraint
    is violated on entry.  Returns ``Failure`` when no repair respecting
    the constraints is found.
    """
    phi, cs = _prepare(m, s, phi, constraints)
    ctx = _Ctx(_budget(m, phi))
    out = _repair(_Work(m), s, phi, cs, ctx)
    if out is None:
        why = "search budget exhausted" if ctx.exhausted else "no repair satisfies the constraints"
        return Failure(why)
    return RepairOutcome(out.m, list(out.trace), cs, distance_kmts(m, out.m))


def _primitive(handler, kind):
    def run(m: Kmts, s: str, phi: Formula, constraints=()) -> Kmts | Failure:
        phi, cs = _prepare(m, s, phi, constraints)
        if not isinstance(phi, kind):
            raise RepairContractError(f"expected a {kind.__name__} formula, got {ctl.to_text(phi)}")
        ctx = _Ctx(_budget(m, phi))
        ctx.depth = 1
        out = handler(_Work(m), s, phi, cs, ctx)
        out = _accept(out, s, phi, cs)
        return out.m if out is not None else Failure("no repair found")
    run.__name__ = f"repair_{handler.__name__.strip('_')}"
    return run


def repair_atomic(m: Kmts, s: str, phi: Formula, constraints=()) -> Kmts | Failure:
    """ChangeLabel at ``s``; fails if that breaks a constraint."""
    phi, cs = _prepare(m, s, phi, constraints)
    if ctl.as_literal(phi) is None:
        raise RepairContractError(f"expected a literal, got {ctl.to_text(phi)}")
    out = _atomic(_Work(m), s, phi, cs, _Ctx(1))
    return out.m if out is not None else Failure("relabeling violates a constraint")


repair_or = _primitive(_or, Or)
repair_and = _primitive(_and, And)
repair_ag = _primitive(_ag, AG)
repair_ex = _primitive(_ex, EX)
repair_ax = _primitive(_ax, AX)
repair_eg = _primitive(_eg, EG)
repair_af = _primitive(_af, AF)
repair_ef = _primitive(_ef, EF)
repair_au = _primitive(_au, AU)
repair_eu = _primitive(_eu, EU)


# ---------------------------------------------------------------- pipeline

@dataclass
class ConcreteRepair:
    model: KripkeStructure
    d: int


@dataclass
class PipelineReport:
    status: str
    state: str
    formula: str
    baseline: bool
    initial_blocks: int
    refinements: int
    final_blocks: int
    verdicts: list[str]
    target_block: str | None
    trace: list = field(default_factory=list)
    d_hat: int | None = None
    repairs: list[ConcreteRepair] = field(default_factory=list)
    partition: AbstractionMap | None = None
    abstraction: Kmts | None = None
    repaired_kmts: Kmts | None = None
    message: str = ""
    timings: dict = field(default_factory=dict)
    baseline_model: KripkeStructure | None = None

    @property
    def best_distance(self) -> int | None:
        return min((r.d for r in self.repairs), default=None)

    @property
    def ok(self) -> bool:
        return self.status in ("repaired", "no-repair-needed")

    def to_dict(self, timings: bool = True) -> dict:
        out = {
            "status": self.status,
            "state": self.state,
            "formula": self.formula,
            "baseline": self.baseline,
            "abstraction": {
                "initial_blocks": self.initial_blocks,
                "refinements": self.refinements,
                "final_blocks": self.final_blocks,
                "verdicts": self.verdicts,
                "target_block": self.target_block,
                "partition": [{"block": b, "states": list(mem)} for b, mem in self.partition.blocks]
                if self.partition is not None else [],
            },
            "repair": {
                "trace": [str(op) for op in self.trace],
                "d_hat": self.d_hat,
            },
            "concrete": [_concrete_dict(r, self.baseline_model) for r in self.repairs],
            "message": self.message,
        }
        if timings:
            out["timings_s"] = {k: round(v, 6) for k, v in self.timings.items()}
        return out

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, ensure_ascii=False) + "\n"


def _concrete_dict(r: ConcreteRepair, original: KripkeStructure | None) -> dict:
    out = {"d": r.d}
    if original is not None:
        k = r.model
        out["added_states"] = [s for s in k.states if s not in original.index]
        out["removed_states"] = [s for s in original.states if s not in k.index]
        out["added_transitions"] = [f"{a} -> {b}" for a, b in k.sorted_edges() if (a, b) not in original.trans]
        out["removed_transitions"] = [f"{a} -> {b}" for a, b in original.sorted_edges() if (a, b) not in k.trans]
        out["relabeled"] = {s: sorted(str(x) for x in k.labels[s]) for s in k.states
                            if s in original.index and k.labels[s] != original.labels[s]}
    return out


def _concretize_trace(m: KripkeStructure, p: AbstractionMap, mh: Kmts, trace) -> tuple[list, str]:
    """Realise the trace step by step, keeping the closest models at each step."""
    frontier = [(m, p)]
    steps = [mh]
    for op in trace:
        steps.append(apply_basic_op(steps[-1], op))
    for op, after in zip(trace, steps[1:]):
        nxt = {}
        for k, part in frontier:
            for k2 in concretize_min(k, part, op, mh_after=after):
                nxt.setdefault(k2.key(), (k2, partition_after(part, op)))
        if not nxt:
            return [], f"no valid concrete realisation of {op}"
        ranked = sorted(nxt.values(), key=lambda kp: (distance_ks(m, kp[0]), kp[0].key()))
        frontier = ranked[:CANDIDATE_LIMIT]
    fresh = [op.state for op in trace if isinstance(op, AddState)]
    done = {}
    for k, part in frontier:
        if fresh:
            k = resolve_pending(k, fresh, steps[-1], part)
        if validate_ks(k):
            continue
        done.setdefault(k.key(), k)
    if not done:
        return [], "every concrete realisation breaks the Kripke structure conditions"
    scored = sorted(((distance_ks(m, k), k.key(), k) for k in done.values()), key=lambda x: x[:2])
    best = scored[0][0]
    return [ConcreteRepair(k, d) for d, _, k in scored if d == best], ""


def run_pipeline(m: KripkeStructure, s: str, phi: Formula, baseline: bool = False,
                 partition: AbstractionMap | None = None) -> PipelineReport:
    """Abstract, refine, repair and concretize.

    With ``baseline`` set the abstraction is the identity (one block per
    state) and no refinement takes place.
    """
    if s not in m.index:
        raise RepairContractError(f"unknown state {s}")
    phi_pnf = ctl.to_pnf(phi)
    timings = {}
    t_start = time.perf_counter()
    if baseline:
        p0 = singleton_partition(m)
    else:
        p0 = partition if partition is not None else default_partition(m)
    report = PipelineReport("", s, ctl.to_text(phi), baseline, len(p0), 0, len(p0), [], None,
                            baseline_model=m)

    t0 = time.perf_counter()
    if baseline:
        mh = abstract(m, p0)
        verdict = check3(mh, p0.alpha[s], phi_pnf)
        p, verdicts, stuck, steps = p0, [str(verdict)], None, 0
    else:
        ref = refine_until_definite(m, p0, s, phi_pnf)
        mh, p, verdict, stuck, steps = ref.kmts, ref.partition, ref.verdict, ref.stuck, ref.steps
        verdicts = [str(v) for _, v, _ in ref.history]
    timings["refine"] = time.perf_counter() - t0
    report.refinements, report.final_blocks, report.verdicts = steps, len(p), verdicts
    report.partition, report.abstraction = p, mh
    report.target_block = p.alpha[s]

    def finish(status, message=""):
        report.status, report.message = status, message
        timings["total"] = time.perf_counter() - t_start
        report.timings = timings
        return report

    if verdict is ThreeValued.T:
        report.repairs = [ConcreteRepair(m, 0)]
        return finish("no-repair-needed", "the property already holds")
    if verdict is ThreeValued.U:
        return finish("refinement-failed", f"verdict stays undefined; cause {stuck}")

    t0 = time.perf_counter()
    outcome = abstract_repair(mh, p.alpha[s], phi_pnf)
    timings["repair"] = time.perf_counter() - t0
    if isinstance(outcome, Failure):
        return finish("repair-failed", outcome.reason)
    report.trace, report.d_hat, report.repaired_kmts = outcome.trace, outcome.d_hat, outcome.repaired

    t0 = time.perf_counter()
    repairs, why = _concretize_trace(m, p, mh, outcome.trace)
    timings["concretize"] = time.perf_counter() - t0
    if not repairs:
        return finish("concretization-failed", why)
    # drop anything that does not actually satisfy the property
    repairs = [r for r in repairs if check2(r.model, s, phi_pnf)]
    if not repairs:
        return finish("concretization-failed", "no concrete model satisfies the property")
    report.repairs = repairs
    outcome.concretizations = [(r.model, r.d) for r in repairs]
    return finish("repaired")
