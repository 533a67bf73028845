"""Refinement of an abstraction whose verdict is undefined.

A failure cause is either a literal whose value is unknown at a block or a
may-transition that is not a must-transition.  Splitting the block along
the cause separates the members that disagree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .abstraction import abstract, check_partition
from .ctl import Formula
from .mc3 import (FailureCause, MayNotMust, ThreeValued, UnknownLiteral, check3_result,
                  CheckResult)
from .models import AbstractionMap, Kmts, KripkeStructure, Literal

__all__ = ["FailureCause", "MayNotMust", "UnknownLiteral", "find_failure", "split",
           "refine_until_definite", "RefinementError", "Refinement"]


class RefinementError(RuntimeError):
    """No split can remove the cause of an undefined verdict."""


def find_failure(mh: Kmts, result: CheckResult) -> FailureCause:
    if result.verdict is not ThreeValued.U:
        raise ValueError(f"verdict is {result.verdict}, not undefined")
    if result.cause is None:
        raise RefinementError("no failure cause could be located")
    return result.cause


def split(m: KripkeStructure, p: AbstractionMap, cause: FailureCause) -> AbstractionMap:
    """Split the cause's block in two.

    The part holding the earliest declared state keeps suffix 1, the other
    part gets suffix 2.
    """
    check_partition(m, p)
    block = cause.state
    members = p.gamma.get(block)
    if members is None:
        raise RefinementError(f"unknown block {block}")
    if len(members) < 2:
        raise RefinementError(f"block {block} has a single state and cannot be split")
    if isinstance(cause.kind, UnknownLiteral):
        lit = Literal(cause.kind.prop)
        test = lambda s: lit in m.labels[s]  # noqa: E731
    elif isinstance(cause.kind, MayNotMust):
        target = set(p.gamma[cause.kind.edge[1]])
        test = lambda s: bool(target & set(m.succ[s]))  # noqa: E731
    else:
        raise RefinementError(f"unknown cause {cause!r}")
    yes = [s for s in members if test(s)]
    no = [s for s in members if not test(s)]
    if not yes or not no:
        raise RefinementError(f"{cause} does not separate block {block}")
    first, second = (yes, no) if members.index(yes[0]) < members.index(no[0]) else (no, yes)
    names = set(p.names)
    n1, n2 = f"{block}1", f"{block}2"
    if n1 in names or n2 in names:
        raise RefinementError(f"block names {n1}/{n2} already in use")
    blocks = []
    for name, mem in p.blocks:
        if name == block:
            blocks += [(n1, first), (n2, second)]
        else:
            blocks.append((name, mem))
    return AbstractionMap(blocks)


@dataclass
class Refinement:
    kmts: Kmts
    partition: AbstractionMap
    verdict: ThreeValued
    steps: int
    history: list[tuple[AbstractionMap, ThreeValued, FailureCause | None]] = field(default_factory=list)
    stuck: FailureCause | None = None


def refine_until_definite(m: KripkeStructure, p0: AbstractionMap, s: str, phi: Formula,
                          max_steps: int | None = None) -> Refinement:
    """Abstract, check, split until the verdict at ``alpha(s)`` is definite.

    ``stuck`` is set when the verdict stays undefined and no further split
    is possible.
    """
    p = p0
    limit = len(m.states) - len(p0) if max_steps is None else max_steps
    history = []
    steps = 0
    while True:
        mh = abstract(m, p)
        res = check3_result(mh, p.alpha[s], phi)
        history.append((p, res.verdict, res.cause))
        if res.verdict is not ThreeValued.U:
            return Refinement(mh, p, res.verdict, steps, history)
        cause = find_failure(mh, res)
        if steps >= limit:
            return Refinement(mh, p, res.verdict, steps, history, stuck=cause)
        try:
            p = split(m, p, cause)
        except RefinementError:
            return Refinement(mh, p, res.verdict, steps, history, stuck=cause)
        steps += 1
