import random

import pytest

from amr.abstraction import (ConcretizationError, PartitionError, abstract, alpha_relation,
                             concretization_candidates, concretize_min, default_partition,
                             in_concretization, mixed_simulation, partition_after, resolve_pending,
                             singleton_partition)
from amr.bench import load_fixture
from amr.metrics import distance_ks
from amr.models import AbstractionMap, Kmts, KripkeStructure, identity_kmts, neg, pos
from amr.ops import OP_KINDS, AddMust, AddState, ChangeLabel, RemoveMay, apply_basic_op

from gen import concretization_instance, random_ks, random_partition
from oracles import concretization_bound, edge_realisations, label_realisations, oracle_abstract


def test_ado_abstraction_matches_initial_kmts():
    m = load_fixture("ado.ks")
    p = default_partition(m)
    assert [len(mem) for _, mem in p.blocks] == [10, 1]
    assert abstract(m, p) == load_fixture("ado_init.kmts")


def test_afs1_default_partition_has_three_blocks():
    p = default_partition(load_fixture("afs1.ks"))
    assert len(p) == 3


def test_all_distinct_labels_give_singletons():
    m = KripkeStructure(["p", "q"], ["a", "b"], ["a"], [("a", "b"), ("b", "a")],
                        {"a": {pos("p"), pos("q")}, "b": {neg("p"), pos("q")}})
    assert [mem for _, mem in default_partition(m).blocks] == [("a",), ("b",)]


def test_singleton_partition_gives_identity():
    m = load_fixture("ado.ks")
    assert abstract(m, singleton_partition(m)) == identity_kmts(m)


def test_invalid_partition():
    m = load_fixture("ado.ks")
    with pytest.raises(PartitionError):
        abstract(m, AbstractionMap([("A", ["s0"])]))


def test_abstraction_matches_quantifier_oracle():
    rng = random.Random(12)
    for _ in range(300):
        m = random_ks(rng, max_states=6)
        p = random_partition(rng, m)
        mh = abstract(m, p)
        init, must, may, labels, _ = oracle_abstract(m, {b: list(mem) for b, mem in p.blocks})
        assert mh.initial == init and mh.must == must and mh.may == may
        assert all(mh.labels[b] == labels[b] for b in mh.states)
        assert in_concretization(m, p, mh)


def test_mixed_simulation_holds_for_alpha():
    rng = random.Random(13)
    for _ in range(200):
        m = random_ks(rng, max_states=7)
        for p in (default_partition(m), random_partition(rng, m)):
            assert mixed_simulation(m, abstract(m, p), alpha_relation(p))
    m = load_fixture("ado.ks")
    assert mixed_simulation(m, identity_kmts(m), {(s, s) for s in m.states})


def test_dropping_a_may_edge_breaks_clause_two():
    m = load_fixture("ado.ks")
    p = default_partition(m)
    mh = abstract(m, p)
    broken = Kmts(mh.props, mh.states, mh.initial, mh.must, mh.may - {("s_hat0", "s_hat1")}, mh.labels)
    res = mixed_simulation(m, broken, alpha_relation(p))
    assert not res and res.clause == 2


def test_ado_concretization_adds_seven_edges():
    m = load_fixture("ado.ks")
    from amr.refinement import refine_until_definite
    from amr.ctl import parse_ctl
    ref = refine_until_definite(m, default_partition(m), "s0", parse_ctl("AG EX q"))
    op = AddMust(("s_hat01", "s_hat1"))
    out = concretize_min(m, ref.partition, op, apply_basic_op(ref.kmts, op))
    assert out == [load_fixture("ado_repaired.ks")]
    added = out[0].trans - m.trans
    assert len(added) == 7 and {b for _, b in added} == {"s10"}


def test_afs1_relabel_block():
    m = load_fixture("afs1.ks")
    red = [s for s in m.states if m.labels[s] == {pos("p"), neg("q")}]
    p = AbstractionMap([("red", red), ("rest", [s for s in m.states if s not in red])])
    out = concretize_min(m, p, ChangeLabel("red", {neg("p")}))
    assert out == [load_fixture("afs1_repaired.ks")]
    assert distance_ks(m, out[0]) == 6


def test_add_state_has_distance_one_and_pending_label():
    m = load_fixture("ado.ks")
    p = default_partition(m)
    out = concretize_min(m, p, AddState("_n0"))
    assert len(out) == 1 and distance_ks(m, out[0]) == 1
    assert out[0].labels["_n0"] == frozenset()
    done = resolve_pending(out[0], ["_n0"])
    assert done.labels["_n0"] == {neg("q")}
    assert partition_after(p, AddState("_n0")).gamma["_n0"] == ("_n0",)


def test_mismatched_kmts_is_rejected():
    m = load_fixture("ado.ks")
    p = default_partition(m)
    wrong = apply_basic_op(abstract(m, p), AddMust(("s_hat0", "s_hat1")))
    with pytest.raises(ConcretizationError):
        concretize_min(m, p, RemoveMay(("s_hat0", "s_hat1")), wrong)


def test_totality_breaking_choices_are_flagged():
    m = KripkeStructure([], ["a", "b"], ["a"], [("a", "b"), ("b", "b")], {})
    p = singleton_partition(m)
    cands = concretization_candidates(m, p, RemoveMay(("a", "b")))
    assert [c.valid for c in cands] == [False]
    assert concretize_min(m, p, RemoveMay(("a", "b"))) == []


# ------------------------------------------------ bounds and brute-force minimality

@pytest.mark.parametrize("kind", OP_KINDS)
def test_concretization_bounds_and_minimality(kind):
    rng = random.Random(sum(map(ord, kind)))
    brute_checked = 0
    for _ in range(200):
        m, p, op = concretization_instance(rng, kind)
        target = apply_basic_op(abstract(m, p), op)
        got = concretize_min(m, p, op, target)
        n = len(m.states)
        lo, hi = concretization_bound(kind, n)
        p_after = partition_after(p, op)
        for k in got:
            assert lo <= distance_ks(m, k) <= hi, (op, distance_ks(m, k))
            if kind != "AddState":
                assert abstract(k, p_after) == target
                assert in_concretization(k, p_after, target)
        blocks = {b: list(mem) for b, mem in p.blocks}
        if kind in ("AddMust", "AddMay", "RemoveMust", "RemoveMay"):
            if len(blocks[op.edge[0]]) * len(blocks[op.edge[1]]) > 8:
                continue
            brute = list(edge_realisations(m, blocks, op.edge, target))
        elif kind == "ChangeLabel":
            brute = list(label_realisations(m, blocks, op.state, target))
        else:
            # one state added, or the isolated block dropped: nothing smaller exists
            assert len(got) == 1
            continue
        if brute:
            assert got, op
            assert min(distance_ks(m, k) for k in brute) == distance_ks(m, got[0])
            brute_checked += 1
        else:
            assert not got
    if kind not in ("AddState", "RemoveState"):
        assert brute_checked > 0
