import itertools
import random

import pytest

from amr.ctl import (AG, AU, AX, EF, EG, EU, EX, FALSE, TRUE, And, CtlSyntaxError, Lit, Not, Or,
                     depth, is_mr_ctl, is_pnf, parse_ctl, props_of, size, to_pnf, to_text)
from amr.mc3 import check3
from amr.models import Kmts, Literal

from gen import random_formula, random_kmts

p, q, r = Lit("p"), Lit("q"), Lit("r")


@pytest.mark.parametrize("text, tree", [
    ("AG EX q", AG(EX(q))),
    ("AG (!p | q)", AG(Or(Not(p), q))),
    ("A[p U q & r]", AU(p, And(q, r))),
    ("E[p U q]", EU(p, q)),
    ("p & q | r", Or(And(p, q), r)),
    ("p | q | r", Or(Or(p, q), r)),
    ("!p & q", And(Not(p), q)),
    ("AX p & q", And(AX(p), q)),
    ("true | false", Or(TRUE, FALSE)),
    ("p -> q -> r", Or(Not(p), Or(Not(q), r))),
    ("EF (p)", EF(p)),
    ("Server.belief", Lit("Server.belief")),
])
def test_parse(text, tree):
    assert parse_ctl(text) == tree


@pytest.mark.parametrize("text, line, col", [
    ("AG", 1, 3),
    ("p &", 1, 4),
    ("A[p q]", 1, 5),
    ("(p", 1, 3),
    ("p q", 1, 3),
    ("p\n  & $", 2, 5),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(CtlSyntaxError) as e:
        parse_ctl(text)
    assert (e.value.line, e.value.column) == (line, col)
    assert e.value.expected or "unexpected" in str(e.value)


def test_keywords_are_not_propositions():
    with pytest.raises(CtlSyntaxError):
        parse_ctl("AG U")


def test_printer_round_trip_on_random_formulas():
    rng = random.Random(3)
    for _ in range(500):
        phi = random_formula(rng, 4, props=("p", "q", "r"))
        text = to_text(phi)
        assert parse_ctl(text) == phi, text
        assert to_text(parse_ctl(text)) == text


def test_printer_canonical_spacing():
    assert to_text(parse_ctl("AG(!p|q)")) == "AG (!p | q)"
    assert to_text(parse_ctl("A[ p U q ]")) == "A[p U q]"
    assert to_text(parse_ctl("p | (q | r)")) == "p | (q | r)"


def test_pnf_examples():
    assert to_pnf(parse_ctl("!(p & q)")) == Or(Not(p), Not(q))
    assert to_pnf(parse_ctl("!AG p")) == EF(Not(p))
    assert to_pnf(parse_ctl("!AX (p | q)")) == EX(And(Not(p), Not(q)))
    assert to_pnf(parse_ctl("!!p")) == p
    assert to_pnf(parse_ctl("!A[p U q]")) == Or(EU(Not(q), And(Not(p), Not(q))), EG(Not(q)))
    assert to_pnf(parse_ctl("!E[p U q]")) == Or(AU(Not(q), And(Not(p), Not(q))), AG(Not(q)))


def test_pnf_is_idempotent_and_in_normal_form():
    rng = random.Random(5)
    for _ in range(500):
        phi = random_formula(rng, 3)
        phi = Not(phi) if rng.random() < 0.5 else phi
        once = to_pnf(phi)
        assert is_pnf(once)
        assert to_pnf(once) == once


def test_pnf_preserves_three_valued_meaning():
    rng = random.Random(11)
    for _ in range(1500):
        m = random_kmts(rng, max_states=4)
        phi = Not(random_formula(rng, 3))
        for s in m.states:
            assert check3(m, s, phi) == check3(m, s, to_pnf(phi))


def test_pnf_equivalence_exhaustive_on_one_and_two_states():
    lits = [set(), {Literal("p")}, {Literal("p", True)}]
    formulas = [parse_ctl(t) for t in ("!AX p", "!EG p", "!A[p U !p]", "!E[!p U p]", "!AF EX p", "!(p & EX p)")]
    pairs = [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]
    for n in (1, 2):
        states = ["a", "b"][:n]
        edges = [e for e in pairs if set(e) <= set(states)]
        for may in itertools.chain.from_iterable(itertools.combinations(edges, k) for k in range(len(edges) + 1)):
            for must in itertools.chain.from_iterable(itertools.combinations(may, k) for k in range(len(may) + 1)):
                for labs in itertools.product(lits, repeat=n):
                    m = Kmts(["p"], states, ["a"], must, may, dict(zip(states, labs)))
                    for phi in formulas:
                        assert check3(m, "a", phi) == check3(m, "a", to_pnf(phi))


@pytest.mark.parametrize("text, expected", [
    ("AG p", True),
    ("AG EX q", False),
    ("E[p U q]", True),
    ("E[p U !p]", True),
    ("AG !p | q", True),
    ("AG (p | q)", False),
    ("p & q", False),
    ("AF p & q", False),
    ("p | EX q", True),
    ("!AG p", True),
    ("!AG EX p", False),
])
def test_mr_ctl(text, expected):
    assert is_mr_ctl(parse_ctl(text)) is expected


def test_size_depth_props():
    phi = parse_ctl("AG (!p | E[q U r])")
    assert size(phi) == 7
    assert depth(phi) == 4
    assert props_of(phi) == {"p", "q", "r"}
