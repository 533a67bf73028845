import pytest

from amr.bench import (AFS1_PROPERTY, AFS1_TARGET, afs1_extension, bench_models, clone_state,
                       load_fixture, rows_to_csv, run_bench)
from amr.ctl import parse_ctl
from amr.mc3 import check2
from amr.models import KripkeStructure, validate_ks
from amr.repair import run_pipeline


def test_clone_copies_label_edges_and_self_loop():
    m = KripkeStructure([], ["a", "b"], ["a"], [("a", "a"), ("a", "b"), ("b", "a")], {})
    c = clone_state(m, "a", "c")
    assert c.trans == m.trans | {("c", "c"), ("c", "b"), ("b", "c")}
    assert c.initial == {"a", "c"}


@pytest.mark.parametrize("level, states", [(0, 26), (1, 30), (2, 34), (3, 38)])
def test_extension_fixtures_match_construction(level, states):
    base = load_fixture("afs1.ks")
    built = afs1_extension(base, level)
    assert len(built.states) == states and validate_ks(built) == []
    if level:
        assert load_fixture(f"afs1_ext{level}.ks") == built


@pytest.mark.parametrize("level", [1, 2, 3])
def test_extensions_are_repaired(level):
    m = load_fixture(f"afs1_ext{level}.ks")
    phi = parse_ctl(AFS1_PROPERTY)
    assert not check2(m, AFS1_TARGET, phi)
    r = run_pipeline(m, AFS1_TARGET, phi)
    assert r.status == "repaired"
    assert all(check2(x.model, AFS1_TARGET, phi) for x in r.repairs)


def test_bench_rows():
    rows = run_bench(extensions=1, repeat=1)
    assert [r.model for r in rows] == ["AFS1", "AFS1-ext1"]
    assert all(r.baseline_d and r.amr_d for r in rows)
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == "model,states,baseline_time_s,amr_time_s,ratio,baseline_d,amr_d"
    assert [n for n, _ in bench_models(2)] == ["AFS1", "AFS1-ext1", "AFS1-ext2"]
