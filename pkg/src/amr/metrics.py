"""Structural distances between models.

States are compared by id, so renaming a state counts as a change.
The labeling term compares the graphs {(s, L(s))} on the common states;
each relabeled common state contributes two pairs, halved to one.
"""

from __future__ import annotations

from .models import Kmts, KripkeStructure


class PropositionMismatch(ValueError):
    pass


def _label_term(states_a, labels_a, states_b, labels_b) -> int:
    common = set(states_a) & set(states_b)
    graph_a = {(s, labels_a[s]) for s in common}
    graph_b = {(s, labels_b[s]) for s in common}
    diff = len(graph_a ^ graph_b)
    # every relabeled state shows up once on each side
    assert diff % 2 == 0
    return diff // 2


def distance_ks(m: KripkeStructure, m2: KripkeStructure) -> int:
    if set(m.props) != set(m2.props):
        raise PropositionMismatch(f"propositions differ: {sorted(m.props)} vs {sorted(m2.props)}")
    return (len(set(m.states) ^ set(m2.states)) + len(m.trans ^ m2.trans)
            + _label_term(m.states, m.labels, m2.states, m2.labels))


def distance_kmts(m: Kmts, m2: Kmts) -> int:
    """Abstract distance.

    An edge counts once if its status (absent, may-only, must) differs
    between the two models.  Moving an edge between must and may-only is
    one change, not one must change plus one may change.
    """
    if set(m.props) != set(m2.props):
        raise PropositionMismatch(f"propositions differ: {sorted(m.props)} vs {sorted(m2.props)}")
    must_diff = m.must ^ m2.must
    may_only_diff = (m.may - m.must) ^ (m2.may - m2.must)
    return (len(set(m.states) ^ set(m2.states)) + len(must_diff | may_only_diff)
            + _label_term(m.states, m.labels, m2.states, m2.labels))
