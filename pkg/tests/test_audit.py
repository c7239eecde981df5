import pytest
from hypothesis import given, settings

from assignmax.assignment_core import PreconditionError, apply_move
from assignmax.audit import (
    EXACT,
    LEMMA,
    CapExceeded,
    audit,
    check_efficient,
    check_fair,
    check_fair_unassigned,
    check_maximal,
    check_non_wasteful,
    check_stable,
    dominates,
    enumerate_ir_matchings,
    rural_hospital_gap,
    school_proposing_da,
    size_wise_dominates,
)
from assignmax.core_model import Matching, Problem, fixture_a, fixture_b, fixture_c
from assignmax.corpus import random_corpus
from assignmax.mechanisms import run_da, run_eam

import oracles
from oracles import problems

A_DA = Matching({"i1": "a", "i2": None})
A_EAM = Matching({"i1": "b", "i2": "a"})
B_EAM = Matching({"k": "c", "j": "a", "i": "b", "h": None})
B_ALT = Matching({"k": "a", "j": "c", "i": "b", "h": None})


def empty_market():
    return Problem.build(["x", "y"], [("s", 1)], {"s": ["x", "y"]}, {"x": [], "y": []})


def test_non_wasteful_examples():
    a = fixture_a()
    assert check_non_wasteful(a, A_DA).holds
    v = check_non_wasteful(a, Matching({"i1": None, "i2": "a"}))
    assert not v.holds and v.witness == ("i1", "b")
    e = empty_market()
    assert check_non_wasteful(e, Matching.empty(e)).holds


def test_fair_examples():
    a = fixture_a()
    v = check_fair(a, A_EAM)
    assert not v.holds and v.witness == ("i1", "a", "i2")
    b = fixture_b()
    assert check_fair(b, run_da(b)).holds
    e = empty_market()
    assert check_fair(e, Matching.empty(e)).holds


def test_stable_examples():
    for p in (fixture_a(), fixture_b()):
        assert check_stable(p, run_da(p)).holds
    v = check_stable(fixture_a(), A_EAM)
    assert not v.holds and v.witness == ("i1", "a", "i2")
    e = empty_market()
    assert check_stable(e, Matching.empty(e)).holds


def test_fair_unassigned_examples():
    b = fixture_b()
    assert check_fair_unassigned(b, B_EAM).holds
    v = check_fair_unassigned(b, B_ALT)
    assert not v.holds and v.witness == ("h", "c", "j")
    assert check_fair_unassigned(fixture_a(), A_EAM).holds


def test_maximal_examples():
    a = fixture_a()
    assert check_maximal(a, A_EAM).holds
    assert not check_maximal(a, A_DA).holds
    e = empty_market()
    assert check_maximal(e, Matching.empty(e)).holds


def test_dominates_examples():
    c = fixture_c()
    assert not dominates(c, Matching({"i": "b", "j": "a"}), Matching({"i": "a", "j": None}))
    same = Matching({"i": "b", "j": "a"})
    assert not dominates(c, same, same)
    assert dominates(c, Matching({"i": "a", "j": None}), Matching({"i": "b", "j": None}))


def test_size_wise_dominates():
    assert size_wise_dominates(A_EAM, A_DA)
    assert not size_wise_dominates(A_DA, Matching({"i1": None, "i2": "a"}))
    assert not size_wise_dominates(Matching({"x": None}), Matching({"x": None}))


def test_efficient_examples():
    a, b = fixture_a(), fixture_b()
    for p, mu in ((a, run_eam(a, ("i1", "i2"))), (b, run_eam(b, ("k", "j", "i", "h")))):
        assert check_efficient(p, mu, EXACT).holds
        assert check_efficient(p, mu, LEMMA).holds
    assert check_efficient(a, A_DA, EXACT).holds
    assert len(list(enumerate_ir_matchings(a))) == 5
    with pytest.raises(PreconditionError):
        check_efficient(a, A_DA, LEMMA)
    with pytest.raises(ValueError):
        check_efficient(a, A_DA, "sampled")


def test_efficiency_witnesses_revalidate():
    p = Problem.build(
        ["x", "y"],
        [("s1", 1), ("s2", 1)],
        {"s1": ["x", "y"], "s2": ["x", "y"]},
        {"x": ["s2", "s1"], "y": ["s1", "s2"]},
    )
    mu = Matching({"x": "s1", "y": "s2"})
    exact = check_efficient(p, mu, EXACT)
    assert not exact.holds and dominates(p, exact.witness, mu)
    lemma = check_efficient(p, mu, LEMMA)
    assert not lemma.holds and dominates(p, apply_move(p, mu, lemma.witness), mu)


def test_state_cap():
    # efficient but not maximal, so the exact search has to exhaust
    extra = [f"j{k}" for k in range(5)]
    students = ["i1", "i2"] + extra
    p = Problem.build(
        students,
        [("a", 1), ("b", 1), ("c", 5)],
        {s: students for s in ("a", "b", "c")},
        {"i1": ["a", "b"], "i2": ["a"], **{j: ["c"] for j in extra}},
    )
    mu = Matching({"i1": "a", "i2": None, **{j: "c" for j in extra}})
    with pytest.raises(CapExceeded) as exc:
        check_efficient(p, mu, EXACT, cap=10)
    assert exc.value.cap == 10
    report = audit(p, mu, cap=10)
    assert report["efficient"].holds is None
    assert "cap is 10" in report["efficient"].note
    assert audit(p, mu)["efficient"].holds


def test_audit_report_lines():
    a = fixture_a()
    report = audit(a, A_EAM)
    assert report["maximal"].holds and not report["fair"].holds
    assert report.text().splitlines() == [
        "individually_rational true",
        "non_wasteful true",
        'fair false ["i1", "a", "i2"]',
        'stable false ["i1", "a", "i2"] (fair fails)',
        "fair_for_unassigned true",
        "maximal true (size 2 of 2)",
        "efficient true (lemma)",
    ]
    assert report.to_dict()["fair"] == {"holds": False, "witness": ["i1", "a", "i2"]}


def test_audit_da_fixture_b():
    b = fixture_b()
    report = audit(b, run_da(b))
    assert report["stable"].holds
    assert not report["maximal"].holds


def test_audit_empty_market_all_true():
    e = empty_market()
    assert all(v.holds for v in audit(e, Matching.empty(e)).verdicts)


def test_audit_non_ir_matching():
    a = fixture_a()
    report = audit(a, Matching({"i1": None, "i2": "b"}))
    assert report["individually_rational"].witness == ("i2", "b")
    assert report["efficient"].holds is None


def test_rural_hospital_examples():
    assert rural_hospital_gap(fixture_a()) == 0
    assert rural_hospital_gap(fixture_b()) == 0


def test_rural_hospital_on_corpus():
    for p in random_corpus(300, 6, 4, seed=5):
        assert rural_hospital_gap(p) == 0


@settings(max_examples=200, deadline=None)
@given(problems(max_students=5, max_schools=3))
def test_school_proposing_da_is_stable(p):
    assert oracles.is_stable(p, school_proposing_da(p))


@settings(max_examples=200, deadline=None)
@given(problems(max_students=4, max_schools=3))
def test_stable_implies_fair_for_unassigned(p):
    for mu in oracles.all_ir_matchings(p):
        stable = check_stable(p, mu).holds
        assert stable == oracles.is_stable(p, mu)
        if stable:
            assert check_fair_unassigned(p, mu).holds


@settings(max_examples=200, deadline=None)
@given(problems(max_students=4, max_schools=3))
def test_exact_and_lemma_modes_agree(p):
    ir = list(oracles.all_ir_matchings(p))
    best = max(m.size for m in ir)
    for mu in ir:
        if mu.size == best:
            assert check_efficient(p, mu, EXACT).holds == check_efficient(p, mu, LEMMA).holds


@settings(max_examples=200, deadline=None)
@given(problems(max_students=4, max_schools=3))
def test_false_verdict_witnesses_revalidate(p):
    for mu in oracles.all_ir_matchings(p):
        report = audit(p, mu)
        nw = report["non_wasteful"]
        if not nw.holds:
            i, s = nw.witness
            assert oracles.better(p, i, s, mu[i]) and len(mu.students_at(s)) < dict(p.schools)[s]
        for axiom in ("fair", "fair_for_unassigned"):
            v = report[axiom]
            if not v.holds:
                i, s, j = v.witness
                assert oracles.better(p, i, s, mu[i]) and mu[j] == s
                assert p.priorities[s].index(i) < p.priorities[s].index(j)
                if axiom == "fair_for_unassigned":
                    assert mu[i] is None
        eff = report["efficient"]
        if not eff.holds:
            other = eff.witness if isinstance(eff.witness, Matching) else apply_move(p, mu, eff.witness)
            assert oracles.dominates(p, other, mu)
        assert report["maximal"].holds == (mu.size == oracles.max_size(p))
