import json
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assignmax.core_model import (
    FIXTURES,
    Matching,
    Problem,
    ProblemError,
    check_matching,
    check_ordering,
    dump_matching,
    dump_problem,
    fixture_a,
    fixture_b,
    fixture_c,
    is_individually_rational,
    load_matching,
    load_problem,
    matching_from_indices,
    matching_to_indices,
    prefers,
    validate_problem,
)
from assignmax.mechanisms import run_sd

from oracles import problems


def kinds(violations):
    return [str(v) for v in violations]


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixtures_are_valid(name):
    assert validate_problem(FIXTURES[name]()) == []


def test_missing_priority_entry_is_not_a_permutation():
    p = fixture_a()
    bad = Problem.build(p.students, p.schools, {**p.priorities, "a": ["i1"]}, p.preferences)
    assert kinds(validate_problem(bad)) == ["priority-not-permutation(a)"]


def test_negative_capacity_reported():
    p = fixture_b()
    schools = [(s, -1 if s == "a" else q) for s, q in p.schools]
    bad = Problem.build(p.students, schools, p.priorities, p.preferences)
    assert kinds(validate_problem(bad)) == ["negative-capacity(a)"]


def test_other_violations():
    bad = Problem.build(
        ["x", "x", "y"],
        [("a", 1), ("a", 1)],
        {"a": ["x", "y"], "z": ["x", "y"]},
        {"x": ["a", "a"], "y": ["q"], "w": []},
    )
    found = {v.kind for v in validate_problem(bad)}
    assert {
        "duplicate-student",
        "duplicate-school",
        "unknown-school-priority",
        "duplicate-in-preference",
        "unknown-school-in-preference",
        "unknown-student-preference",
    } <= found


def test_missing_maps_reported():
    bad = Problem.build(["x"], [("a", 1)], {}, {})
    assert {v.kind for v in validate_problem(bad)} == {"missing-priority", "missing-preference"}


def test_zero_capacity_is_legal():
    p = Problem.build(["x"], [("a", 0)], {"a": ["x"]}, {"x": ["a"]})
    assert validate_problem(p) == []


def test_prefers_examples():
    p = fixture_a()
    assert prefers(p, "i1", "a", "b")
    assert prefers(p, "i1", "b", None)
    assert not prefers(p, "i1", "a", "a")
    # unacceptable schools rank below the outside option
    assert prefers(p, "i2", None, "b")
    assert not prefers(p, "i2", "b", "a")


def test_prefers_unknown_student():
    with pytest.raises(ProblemError):
        prefers(fixture_a(), "nobody", "a", "b")


@settings(max_examples=200, deadline=None)
@given(problems(max_students=3, max_schools=4), st.data())
def test_prefers_is_linear(p, data):
    if not p.students:
        return
    i = data.draw(st.sampled_from(p.students))
    options = [None] + list(p.school_ids)
    x = data.draw(st.sampled_from(options))
    y = data.draw(st.sampled_from(options))
    truths = [prefers(p, i, x, y), prefers(p, i, y, x), x == y]
    assert sum(truths) == 1


@settings(max_examples=100, deadline=None)
@given(problems(max_students=3, max_schools=3))
def test_prefers_is_transitive(p):
    options = [None] + list(p.school_ids)
    for i in p.students:
        for x in options:
            for y in options:
                for z in options:
                    if prefers(p, i, x, y) and prefers(p, i, y, z):
                        assert prefers(p, i, x, z)


def test_individual_rationality_examples():
    p = fixture_a()
    assert is_individually_rational(p, Matching({"i1": "b", "i2": "a"}))
    assert not is_individually_rational(p, Matching({"i1": None, "i2": "b"}))
    assert is_individually_rational(p, Matching.empty(p))


def test_matching_size_and_load():
    mu = Matching({"i": "a", "j": None, "k": "a"})
    assert mu.size == 2
    assert mu.load() == {"a": 2}
    assert sorted(mu.students_at("a")) == ["i", "k"]


def test_check_matching_rejects_bad_maps():
    p = fixture_a()
    with pytest.raises(ProblemError):
        check_matching(p, Matching({"i1": "a"}))
    with pytest.raises(ProblemError):
        check_matching(p, Matching({"i1": "a", "i2": "zz"}))
    with pytest.raises(ProblemError):
        check_matching(p, Matching({"i1": "a", "i2": "a"}))


def test_check_ordering():
    p = fixture_a()
    assert check_ordering(p, ["i2", "i1"]) == ("i2", "i1")
    with pytest.raises(ValueError):
        check_ordering(p, ["i1"])
    with pytest.raises(ValueError):
        check_ordering(p, ["i1", "i1"])


def test_with_preferences_keeps_market():
    p = fixture_c()
    q = p.with_preferences({"i": ["a"]})
    assert q.preferences["i"] == ("a",)
    assert q.preferences["j"] == p.preferences["j"]
    assert q.priorities == p.priorities
    assert p.preferences["i"] == ("a", "b")


@settings(max_examples=100, deadline=None)
@given(problems(max_students=4, max_schools=3), st.data())
def test_relabel_preserves_size(p, data):
    mu = run_sd(p, p.students)
    names = data.draw(st.permutations([f"x{k}" for k in range(len(p.students))]))
    mapping = dict(zip(p.students, names))
    q = p.relabel(mapping)
    nu = Matching({mapping[i]: s for i, s in mu.assignment.items()})
    assert nu.size == mu.size
    assert is_individually_rational(q, nu) == is_individually_rational(p, mu)
    assert validate_problem(q) == validate_problem(p)


@settings(max_examples=100, deadline=None)
@given(problems(max_students=4, max_schools=3))
def test_index_round_trip(p):
    mu = run_sd(p, tuple(reversed(p.students)))
    assert matching_from_indices(p, matching_to_indices(p, mu)) == mu


@settings(max_examples=50, deadline=None)
@given(problems(max_students=4, max_schools=3))
def test_problem_file_round_trip(tmp_path_factory, p):
    path = tmp_path_factory.mktemp("rt") / "p.json"
    text = dump_problem(p)
    path.write_text(text)
    again = load_problem(path)
    assert again == p
    assert dump_problem(again) == text


def test_matching_file_round_trip(tmp_path):
    p = fixture_b()
    mu = Matching({"i": "b", "j": "a", "k": "c", "h": None})
    path = tmp_path / "m.json"
    text = dump_matching(mu, p)
    path.write_text(text)
    assert json.loads(text) == {"assignment": {"i": "b", "j": "a", "k": "c", "h": None}}
    assert load_matching(path) == mu
    assert dump_matching(load_matching(path), p) == text


def test_malformed_documents(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"students": []}')
    with pytest.raises(ProblemError):
        load_problem(path)
    path.write_text('{"nothing": 1}')
    with pytest.raises(ProblemError):
        load_matching(path)


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_shipped_fixture_files_match_constants(name):
    text = resources.files("assignmax").joinpath("data", f"{name}.json").read_text()
    assert Problem.from_dict(json.loads(text)) == FIXTURES[name]()
    assert text == dump_problem(FIXTURES[name]())


def test_fixture_contents():
    a = fixture_a()
    assert a.priorities["a"][0] == "i1"
    assert a.preferences == {"i1": ("a", "b"), "i2": ("a",)}
    b = fixture_b()
    assert b.priorities["c"] == ("k", "h", "i", "j")
    assert b.preferences["h"] == ("c",)
    c = fixture_c()
    assert c.preferences == {"i": ("a", "b"), "j": ("a",)}
