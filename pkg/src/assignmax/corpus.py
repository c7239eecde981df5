"""Seeded random school choice problems."""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Optional, Sequence

from .core_model import Problem


def random_problem(
    n_students: int,
    m_schools: int,
    capacity_range: tuple[int, int] = (1, 1),
    acceptability_prob: float = 0.7,
    seed: Optional[int] = None,
    rng: Optional[random.Random] = None,
) -> Problem:
    """Uniform random priorities and preference orders; each school is
    acceptable to each student independently with ``acceptability_prob``."""
    if rng is None:
        rng = random.Random(seed)
    lo, hi = capacity_range
    if lo < 0 or hi < lo:
        raise ValueError(f"bad capacity range {capacity_range}")
    if not 0.0 <= acceptability_prob <= 1.0:
        raise ValueError("acceptability_prob must be in [0, 1]")
    students = [f"i{k + 1}" for k in range(n_students)]
    schools = [f"s{k + 1}" for k in range(m_schools)]
    caps = [(s, rng.randint(lo, hi)) for s in schools]
    priorities = {}
    for s in schools:
        order = list(students)
        rng.shuffle(order)
        priorities[s] = order
    preferences = {}
    for i in students:
        ranking = list(schools)
        rng.shuffle(ranking)
        preferences[i] = [s for s in ranking if rng.random() < acceptability_prob]
    return Problem.build(students, caps, priorities, preferences)


def random_corpus(
    count: int,
    max_students: int,
    max_schools: int,
    max_capacity: int = 2,
    seed: int = 0,
    min_students: int = 1,
    min_schools: int = 1,
) -> Iterator[Problem]:
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(min_students, max_students)
        m = rng.randint(min_schools, max_schools)
        p = rng.choice((0.4, 0.6, 0.8, 1.0))
        yield random_problem(n, m, (1, max_capacity), p, rng=rng)


def all_profiles(market: Problem) -> Iterator[Problem]:
    """Every preference profile over ``market``'s schools, market held fixed."""
    from .game import enumerate_reports

    reports = enumerate_reports(market.school_ids)
    for combo in itertools.product(reports, repeat=len(market.students)):
        yield market.with_preferences(dict(zip(market.students, combo)))


def random_orderings(students: Sequence[str], count: int, rng: random.Random) -> list[tuple[str, ...]]:
    out = []
    for _ in range(count):
        perm = list(students)
        rng.shuffle(perm)
        out.append(tuple(perm))
    return out
