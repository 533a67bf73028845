import random

import pytest

from amr.bench import load_fixture
from amr.metrics import PropositionMismatch, distance_kmts, distance_ks
from amr.models import Kmts, KripkeStructure, neg, pos

from gen import random_kmts, random_ks


def test_identity():
    m = load_fixture("ado.ks")
    assert distance_ks(m, m) == 0
    mh = load_fixture("ado_init.kmts")
    assert distance_kmts(mh, mh) == 0


def test_fixture_distances():
    assert distance_ks(load_fixture("ado.ks"), load_fixture("ado_repaired.ks")) == 7
    assert distance_ks(load_fixture("afs1.ks"), load_fixture("afs1_repaired.ks")) == 6


def test_relabel_counts_once():
    a = KripkeStructure(["p", "q"], ["s"], ["s"], [("s", "s")], {"s": {pos("p"), pos("q")}})
    b = KripkeStructure(["p", "q"], ["s"], ["s"], [("s", "s")], {"s": {neg("p"), neg("q")}})
    assert distance_ks(a, b) == 1


def test_state_ids_matter():
    a = KripkeStructure([], ["x"], ["x"], [("x", "x")], {})
    b = KripkeStructure([], ["y"], ["y"], [("y", "y")], {})
    assert distance_ks(a, b) == 4


def test_must_to_may_is_one_change():
    a = Kmts([], ["x", "y"], [], [("x", "y")], [("x", "y")], {})
    b = Kmts([], ["x", "y"], [], [], [("x", "y")], {})
    c = Kmts([], ["x", "y"], [], [], [], {})
    assert distance_kmts(a, b) == 1
    assert distance_kmts(b, c) == 1
    assert distance_kmts(a, c) == 1


def test_refined_vs_repaired_ado_kmts():
    from amr.abstraction import abstract
    from amr.ops import AddMust, apply_basic_op
    from amr.refinement import refine_until_definite
    from amr.abstraction import default_partition
    from amr.ctl import parse_ctl
    m = load_fixture("ado.ks")
    ref = refine_until_definite(m, default_partition(m), "s0", parse_ctl("AG EX q"))
    repaired = apply_basic_op(ref.kmts, AddMust(("s_hat01", "s_hat1")))
    assert distance_kmts(ref.kmts, repaired) == 1
    assert abstract(load_fixture("ado_repaired.ks"), ref.partition) == repaired


def test_proposition_mismatch():
    a = KripkeStructure(["p"], ["x"], ["x"], [("x", "x")], {"x": {pos("p")}})
    b = KripkeStructure(["q"], ["x"], ["x"], [("x", "x")], {"x": {pos("q")}})
    with pytest.raises(PropositionMismatch):
        distance_ks(a, b)


def _axioms(d, models):
    for a, b, c in models:
        dab, dba = d(a, b), d(b, a)
        assert dab >= 0 and isinstance(dab, int)
        assert (dab == 0) == (a == b)
        assert dab == dba
        assert d(a, c) <= dab + d(b, c)


def test_metric_axioms_ks():
    rng = random.Random(4)
    triples = [tuple(random_ks(rng, max_states=4) for _ in range(3)) for _ in range(300)]
    _axioms(distance_ks, triples)


def test_metric_axioms_kmts():
    rng = random.Random(5)
    triples = [tuple(random_kmts(rng, max_states=3) for _ in range(3)) for _ in range(300)]
    _axioms(distance_kmts, triples)
