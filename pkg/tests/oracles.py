"""Brute-force reference implementations, written independently of the library.

Only the plain data types are shared; every check here enumerates.
"""

import itertools

from hypothesis import strategies as st

from assignmax.core_model import Matching, Problem


def rank(problem, i, school):
    """Lower is better: listed schools by position, then unassigned, then the rest."""
    prefs = list(problem.preferences[i])
    if school is None:
        return len(prefs)
    if school in prefs:
        return prefs.index(school)
    return len(prefs) + 1


def better(problem, i, x, y):
    if x == y:
        return False
    rx, ry = rank(problem, i, x), rank(problem, i, y)
    if rx != ry:
        return rx < ry
    # two unlisted schools: both unacceptable
    return False


def all_ir_matchings(problem):
    caps = dict(problem.schools)
    options = [[None] + list(problem.preferences[i]) for i in problem.students]
    for combo in itertools.product(*options):
        load = {}
        for s in combo:
            if s is not None:
                load[s] = load.get(s, 0) + 1
        if all(load[s] <= caps[s] for s in load):
            yield Matching(dict(zip(problem.students, combo)))


def max_size(problem):
    return max(m.size for m in all_ir_matchings(problem))


def feasible(problem, forced):
    return any(all(m[i] is not None for i in forced) for m in all_ir_matchings(problem))


def dominates(problem, mu, nu):
    strict = False
    for i in problem.students:
        if better(problem, i, nu[i], mu[i]):
            return False
        if better(problem, i, mu[i], nu[i]):
            strict = True
    return strict


def dominated(problem, mu):
    return any(dominates(problem, other, mu) for other in all_ir_matchings(problem))


def is_stable(problem, mu):
    caps = dict(problem.schools)
    for i in problem.students:
        if mu[i] is not None and mu[i] not in problem.preferences[i]:
            return False
        for s in problem.preferences[i]:
            if not better(problem, i, s, mu[i]):
                continue
            holders = [j for j in problem.students if mu[j] == s]
            if len(holders) < caps[s]:
                return False
            order = list(problem.priorities[s])
            if any(order.index(i) < order.index(j) for j in holders):
                return False
    return True


@st.composite
def problems(draw, max_students=4, max_schools=3, max_capacity=2, min_students=0):
    n = draw(st.integers(min_students, max_students))
    m = draw(st.integers(1, max_schools))
    students = [f"i{k + 1}" for k in range(n)]
    schools = [f"s{k + 1}" for k in range(m)]
    caps = [(s, draw(st.integers(0, max_capacity))) for s in schools]
    priorities = {s: draw(st.permutations(students)) for s in schools}
    preferences = {}
    for i in students:
        order = draw(st.permutations(schools))
        k = draw(st.integers(0, m))
        preferences[i] = order[:k]
    return Problem.build(students, caps, priorities, preferences)


@st.composite
def problems_with_ordering(draw, **kwargs):
    p = draw(problems(**kwargs))
    return p, tuple(draw(st.permutations(list(p.students))))
