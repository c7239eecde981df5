"""Preference-reporting games induced by a mechanism.

Students submit any strict ranking of any subset of schools; payoffs are
evaluated with their true preferences. Everything here is exhaustive: the
profile space is enumerated in full, or the call refuses with the budget it
would need.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .audit import CapExceeded
from .core_model import Matching, Problem, SchoolId, StudentId, prefers

Mechanism = Callable[[Problem], Matching]
PreferenceList = tuple[SchoolId, ...]
ReportProfile = dict[StudentId, PreferenceList]

DEFAULT_PROFILE_CAP = 10**7
DEFAULT_DYNAMICS_CAP = 100


@lru_cache(maxsize=None)
def _reports(schools: tuple[SchoolId, ...]) -> tuple[PreferenceList, ...]:
    return tuple(
        perm for k in range(len(schools) + 1) for perm in itertools.permutations(schools, k)
    )


def enumerate_reports(schools: Sequence[SchoolId]) -> list[PreferenceList]:
    """Every strict ranking of every subset of ``schools``: shorter lists first,
    then in lexicographic order of school positions."""
    return list(_reports(tuple(schools)))


def report_count(m: int) -> int:
    return sum(math.perm(m, k) for k in range(m + 1))


@dataclass(frozen=True)
class EquilibriumRecord:
    profile: ReportProfile
    outcome: Matching
    verified: bool
    deviations_checked: int

    def to_dict(self) -> dict:
        return {
            "profile": {i: list(r) for i, r in self.profile.items()},
            "outcome": self.outcome.to_dict()["assignment"],
            "size": self.outcome.size,
            "verified": self.verified,
            "deviations_checked": self.deviations_checked,
        }


def _outcome_chunk(mechanism: Mechanism, truth: Problem, strategies, profiles) -> list[Matching]:
    students = truth.students
    return [
        mechanism(truth.with_preferences({i: strategies[k][r] for k, (i, r) in enumerate(zip(students, profile))}))
        for profile in profiles
    ]


class ReportGame:
    """The normal-form reporting game of ``mechanism`` at ``truth``.

    ``strategies`` optionally restricts each student's report set (e.g. a
    sincere student only has their true list). Outcomes are memoised per
    profile, so every deviation check after the first is a lookup.
    """

    def __init__(
        self,
        mechanism: Mechanism,
        truth: Problem,
        strategies: Optional[Mapping[StudentId, Sequence[PreferenceList]]] = None,
        cap: int = DEFAULT_PROFILE_CAP,
    ):
        self.mechanism = mechanism
        self.truth = truth
        full = _reports(truth.school_ids)
        strategies = strategies or {}
        self.strategies: list[tuple[PreferenceList, ...]] = [
            tuple(tuple(r) for r in strategies[i]) if i in strategies else full for i in truth.students
        ]
        self.index = [{r: k for k, r in enumerate(rs)} for rs in self.strategies]
        self.radix = [len(rs) for rs in self.strategies]
        self.space = math.prod(self.radix)
        if self.space > cap:
            raise CapExceeded("profile enumeration", self.space, cap)
        self._outcomes: dict[tuple[int, ...], Matching] = {}
        self.evaluations = 0

    def profile_of(self, reports: Mapping[StudentId, Sequence[SchoolId]]) -> tuple[int, ...]:
        try:
            return tuple(self.index[k][tuple(reports[i])] for k, i in enumerate(self.truth.students))
        except KeyError as exc:
            raise ValueError(f"report {exc.args[0]} is outside the strategy set") from None

    def reports_of(self, profile: Sequence[int]) -> ReportProfile:
        return {i: self.strategies[k][r] for k, (i, r) in enumerate(zip(self.truth.students, profile))}

    def truthful(self) -> tuple[int, ...]:
        return self.profile_of(self.truth.preferences)

    def outcome(self, profile: tuple[int, ...]) -> Matching:
        mu = self._outcomes.get(profile)
        if mu is None:
            mu = self.mechanism(self.truth.with_preferences(self.reports_of(profile)))
            self._outcomes[profile] = mu
            self.evaluations += 1
        return mu

    def all_profiles(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(r) for r in self.radix))

    def solve_all(self, workers: int = 1) -> None:
        """Evaluate the mechanism on every profile, optionally across processes.

        Results are merged in canonical profile order, so the outcome table is
        identical for any worker count.
        """
        todo = [p for p in self.all_profiles() if p not in self._outcomes]
        if workers <= 1 or len(todo) < 2 * workers:
            for p in todo:
                self.outcome(p)
            return
        size = math.ceil(len(todo) / workers)
        chunks = [todo[k:k + size] for k in range(0, len(todo), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_outcome_chunk, self.mechanism, self.truth, self.strategies, chunk)
                for chunk in chunks
            ]
            for chunk, fut in zip(chunks, futures):
                for p, mu in zip(chunk, fut.result()):
                    self._outcomes[p] = mu
                    self.evaluations += 1

    def profitable_deviation(self, profile: tuple[int, ...], k: int, best: bool = False) -> Optional[int]:
        """Index of a report that strictly improves student ``k`` (by true
        preferences) against ``profile``: the first one in canonical order, or
        with ``best`` the one giving the best school (earliest on ties)."""
        i = self.truth.students[k]
        current = self.outcome(profile)[i]
        found, found_school = None, current
        for r in range(self.radix[k]):
            if r == profile[k]:
                continue
            alt = profile[:k] + (r,) + profile[k + 1:]
            school = self.outcome(alt)[i]
            if prefers(self.truth, i, school, found_school):
                found, found_school = r, school
                if not best:
                    return found
        return found

    def is_equilibrium(self, profile: tuple[int, ...]) -> bool:
        return all(self.profitable_deviation(profile, k) is None for k in range(len(self.radix)))

    def equilibria(self, workers: int = 1) -> list[EquilibriumRecord]:
        self.solve_all(workers)
        checks = sum(self.radix)
        out = []
        for p in self.all_profiles():
            if self.is_equilibrium(p):
                out.append(EquilibriumRecord(self.reports_of(p), self.outcome(p), True, checks))
        return out


def best_response_exists(
    mechanism: Mechanism, truth: Problem, profile: Mapping[StudentId, Sequence[SchoolId]], student: StudentId
) -> Optional[PreferenceList]:
    """First report (in canonical order) that strictly improves ``student``
    under their true preferences, given everyone else's reports in ``profile``."""
    base = truth.with_preferences(profile)
    current = mechanism(base)[student]
    for report in _reports(truth.school_ids):
        if report == tuple(profile[student]):
            continue
        school = mechanism(base.with_preferences({student: report}))[student]
        if prefers(truth, student, school, current):
            return report
    return None


def is_equilibrium(mechanism: Mechanism, truth: Problem, profile: Mapping[StudentId, Sequence[SchoolId]]) -> bool:
    return all(best_response_exists(mechanism, truth, profile, i) is None for i in truth.students)


def enumerate_equilibria(
    mechanism: Mechanism, truth: Problem, cap: int = DEFAULT_PROFILE_CAP, workers: int = 1
) -> list[EquilibriumRecord]:
    """All pure Nash equilibria of the reporting game, in canonical profile order."""
    return ReportGame(mechanism, truth, cap=cap).equilibria(workers)


def equilibrium_size_bounds(
    mechanism: Mechanism, truth: Problem, cap: int = DEFAULT_PROFILE_CAP, workers: int = 1
) -> Optional[tuple[int, int]]:
    """``(min, max)`` matched count over equilibria, or ``None`` if there are none."""
    sizes = [rec.outcome.size for rec in enumerate_equilibria(mechanism, truth, cap, workers)]
    return (min(sizes), max(sizes)) if sizes else None


@dataclass(frozen=True)
class Manipulation:
    student: StudentId
    deviation: PreferenceList
    size_before: int
    size_after: int


def manipulation_size_effect(mechanism: Mechanism, truth: Problem) -> list[Manipulation]:
    """Every profitable unilateral misreport from the truthful profile, with
    the matched count before and after."""
    before = mechanism(truth)
    out = []
    for i in truth.students:
        for report in _reports(truth.school_ids):
            if report == tuple(truth.preferences[i]):
                continue
            after = mechanism(truth.with_preferences({i: report}))
            if prefers(truth, i, after[i], before[i]):
                out.append(Manipulation(i, report, before.size, after.size))
    return out


@dataclass(frozen=True)
class SweepPoint:
    sincere: frozenset[StudentId]
    profile: ReportProfile
    matched: int
    converged: bool
    rounds: int


def best_response_dynamics(
    mechanism: Mechanism,
    truth: Problem,
    sincere: Iterable[StudentId],
    order: Optional[Sequence[StudentId]] = None,
    max_rounds: int = DEFAULT_DYNAMICS_CAP,
    cap: int = DEFAULT_PROFILE_CAP,
) -> SweepPoint:
    """Sequential best-response dynamics from the truthful profile.

    Sincere students are pinned to their true lists; strategic ones, in
    ``order``, switch to a best response whenever it strictly helps them. A
    full round without switches is a fixed point, i.e. an equilibrium of the
    restricted game.
    """
    sincere = frozenset(sincere)
    pinned = {i: [truth.preferences[i]] for i in sincere}
    game = ReportGame(mechanism, truth, strategies=pinned, cap=cap)
    order = truth.students if order is None else tuple(order)
    position = {i: k for k, i in enumerate(truth.students)}
    strategic = [position[i] for i in order if i not in sincere]
    profile = game.truthful()
    for rounds in range(1, max_rounds + 1):
        changed = False
        for k in strategic:
            r = game.profitable_deviation(profile, k, best=True)
            if r is not None:
                profile = profile[:k] + (r,) + profile[k + 1:]
                changed = True
        if not changed:
            return SweepPoint(sincere, game.reports_of(profile), game.outcome(profile).size, True, rounds)
    return SweepPoint(sincere, game.reports_of(profile), game.outcome(profile).size, False, max_rounds)


def sincerity_sweep(
    mechanism: Mechanism,
    truth: Problem,
    sincere_sets: Sequence[Iterable[StudentId]],
    order: Optional[Sequence[StudentId]] = None,
    max_rounds: int = DEFAULT_DYNAMICS_CAP,
) -> list[SweepPoint]:
    """Run the dynamics for each sincere set of a nested chain."""
    sets = [frozenset(s) for s in sincere_sets]
    for small, big in zip(sets, sets[1:]):
        if not small <= big:
            raise ValueError("sincere sets must be nested and increasing")
    return [best_response_dynamics(mechanism, truth, s, order, max_rounds) for s in sets]


def nested_sincere_chain(students: Sequence[StudentId], rng) -> list[frozenset[StudentId]]:
    """Random chain ``{} < {a} < {a, b} < ... < all students``."""
    perm = list(students)
    rng.shuffle(perm)
    return [frozenset(perm[:k]) for k in range(len(perm) + 1)]


@dataclass(frozen=True)
class DominanceCheck:
    dominates: bool
    weak_everywhere: bool
    strict_somewhere: bool
    problems_without_equilibrium: int


def sizewise_dominates_in_equilibrium(
    psi: Mechanism, phi: Mechanism, problems: Sequence[Problem], cap: int = DEFAULT_PROFILE_CAP
) -> DominanceCheck:
    """Whether ``psi`` size-wise dominates ``phi`` in equilibrium over ``problems``
    (true profiles of one market): every ``psi`` equilibrium matches at least as
    many as every ``phi`` equilibrium everywhere, and strictly more somewhere.
    Problems where either mechanism has no equilibrium are counted and skipped."""
    weak, strict, missing = True, False, 0
    for p in problems:
        a = equilibrium_size_bounds(psi, p, cap)
        b = equilibrium_size_bounds(phi, p, cap)
        if a is None or b is None:
            missing += 1
            continue
        if a[0] < b[1]:
            weak = False
        if a[0] > b[1]:
            strict = True
    return DominanceCheck(weak and strict, weak, strict, missing)
