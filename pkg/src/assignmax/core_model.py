"""Domain types for school choice problems.

A :class:`Problem` bundles the market (students, schools, capacities and
strict priorities) with a profile of strict student preferences. Preference
lists only contain acceptable schools; the outside option sits implicitly
after the last ranked school.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

StudentId = str
SchoolId = str

# Sentinel for the outside option in public APIs.
UNASSIGNED = None


class ProblemError(ValueError):
    """Raised when an operation receives ids or inputs the problem does not know."""


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind}({self.subject})"


@dataclass(frozen=True)
class ProblemArrays:
    """Students and schools as dense indices ``0..n-1`` and ``0..m-1``."""

    n: int
    m: int
    cap: tuple[int, ...]
    prefs: tuple[tuple[int, ...], ...]
    rank: tuple[dict[int, int], ...]
    priority_rank: tuple[tuple[int, ...], ...]  # [school][student]


@dataclass(frozen=True)
class Problem:
    """A school choice problem: market plus a strict preference profile.

    ``schools`` is a tuple of ``(school_id, capacity)`` pairs. ``priorities``
    maps each school to its priority order over all students, highest first.
    ``preferences`` maps each student to the ranked list of acceptable schools.
    """

    students: tuple[StudentId, ...]
    schools: tuple[tuple[SchoolId, int], ...]
    priorities: Mapping[SchoolId, tuple[StudentId, ...]]
    preferences: Mapping[StudentId, tuple[SchoolId, ...]]

    @classmethod
    def build(
        cls,
        students: Iterable[StudentId],
        schools: Iterable[tuple[SchoolId, int]] | Mapping[SchoolId, int],
        priorities: Mapping[SchoolId, Sequence[StudentId]],
        preferences: Mapping[StudentId, Sequence[SchoolId]],
    ) -> "Problem":
        if isinstance(schools, Mapping):
            schools = schools.items()
        return cls(
            students=tuple(students),
            schools=tuple((s, int(q)) for s, q in schools),
            priorities={s: tuple(order) for s, order in priorities.items()},
            preferences={i: tuple(lst) for i, lst in preferences.items()},
        )

    @property
    def school_ids(self) -> tuple[SchoolId, ...]:
        return tuple(s for s, _ in self.schools)

    @cached_property
    def capacity(self) -> dict[SchoolId, int]:
        return dict(self.schools)

    @cached_property
    def student_index(self) -> dict[StudentId, int]:
        return {i: k for k, i in enumerate(self.students)}

    @cached_property
    def school_index(self) -> dict[SchoolId, int]:
        return {s: k for k, (s, _) in enumerate(self.schools)}

    @cached_property
    def arrays(self) -> "ProblemArrays":
        """Dense-index view used by the matching algorithms."""
        sidx = self.school_index
        prefs = tuple(tuple(sidx[s] for s in self.preferences[i]) for i in self.students)
        rank = tuple({s: r for r, s in enumerate(lst)} for lst in prefs)
        idx = self.student_index
        prio = tuple(tuple(0 for _ in self.students) for _ in self.schools)
        if all(s in self.priorities for s in self.school_ids):
            prio = tuple(
                tuple(r for _, r in sorted((idx[i], r) for r, i in enumerate(self.priorities[s])))
                for s in self.school_ids
            )
        return ProblemArrays(
            n=len(self.students),
            m=len(self.schools),
            cap=tuple(q for _, q in self.schools),
            prefs=prefs,
            rank=rank,
            priority_rank=prio,
        )

    @cached_property
    def _pref_rank(self) -> dict[StudentId, dict[SchoolId, int]]:
        return {i: {s: r for r, s in enumerate(lst)} for i, lst in self.preferences.items()}

    @cached_property
    def _priority_rank(self) -> dict[SchoolId, dict[StudentId, int]]:
        return {s: {i: r for r, i in enumerate(order)} for s, order in self.priorities.items()}

    def pref_rank(self, student: StudentId, school: Optional[SchoolId]) -> int:
        """Rank of ``school`` for ``student``: 0 is best, the outside option
        ranks just after the last acceptable school, unacceptable ones after it
        (among themselves in declaration order, so the order stays linear)."""
        ranks = self._student_ranks(student)
        if school is None:
            return len(ranks)
        r = ranks.get(school)
        if r is not None:
            return r
        return len(ranks) + 1 + self.school_index.get(school, len(self.schools))

    def priority_rank(self, school: SchoolId, student: StudentId) -> int:
        try:
            return self._priority_rank[school][student]
        except KeyError:
            raise ProblemError(f"no priority of {student!r} at {school!r}") from None

    def acceptable(self, student: StudentId, school: SchoolId) -> bool:
        return school in self._student_ranks(student)

    def _student_ranks(self, student: StudentId) -> dict[SchoolId, int]:
        try:
            return self._pref_rank[student]
        except KeyError:
            raise ProblemError(f"unknown student {student!r}") from None

    def with_preferences(self, preferences: Mapping[StudentId, Sequence[SchoolId]]) -> "Problem":
        """Same market, different (e.g. reported) preference profile."""
        merged = dict(self.preferences)
        merged.update({i: tuple(lst) for i, lst in preferences.items()})
        return Problem(self.students, self.schools, self.priorities, merged)

    def relabel(self, students: Mapping[StudentId, StudentId]) -> "Problem":
        """Rename students consistently across every field."""
        return Problem(
            students=tuple(students[i] for i in self.students),
            schools=self.schools,
            priorities={s: tuple(students[i] for i in o) for s, o in self.priorities.items()},
            preferences={students[i]: lst for i, lst in self.preferences.items()},
        )

    def to_dict(self) -> dict:
        return {
            "students": list(self.students),
            "schools": [{"id": s, "capacity": q} for s, q in self.schools],
            "priorities": {s: list(self.priorities[s]) for s in self.school_ids if s in self.priorities},
            "preferences": {i: list(self.preferences[i]) for i in self.students if i in self.preferences},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Problem":
        try:
            schools = [(entry["id"], entry["capacity"]) for entry in data["schools"]]
            return cls.build(data["students"], schools, data["priorities"], data["preferences"])
        except (KeyError, TypeError) as exc:
            raise ProblemError(f"malformed problem document: {exc}") from exc


@dataclass(frozen=True)
class Matching:
    """Total map from students to a school or ``None`` (unassigned)."""

    assignment: Mapping[StudentId, Optional[SchoolId]]
    _key: tuple = field(init=False, repr=False, compare=True)

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", dict(self.assignment))
        object.__setattr__(self, "_key", tuple(sorted(self.assignment.items(), key=lambda kv: kv[0])))

    def __getitem__(self, student: StudentId) -> Optional[SchoolId]:
        return self.assignment[student]

    def __iter__(self) -> Iterator[StudentId]:
        return iter(self.assignment)

    def __hash__(self) -> int:
        return hash(self._key)

    @property
    def size(self) -> int:
        return sum(1 for s in self.assignment.values() if s is not None)

    def students_at(self, school: SchoolId) -> list[StudentId]:
        return [i for i, s in self.assignment.items() if s == school]

    def load(self) -> dict[SchoolId, int]:
        counts: dict[SchoolId, int] = {}
        for s in self.assignment.values():
            if s is not None:
                counts[s] = counts.get(s, 0) + 1
        return counts

    def replace(self, changes: Mapping[StudentId, Optional[SchoolId]]) -> "Matching":
        updated = dict(self.assignment)
        updated.update(changes)
        return Matching(updated)

    @classmethod
    def empty(cls, problem: Problem) -> "Matching":
        return cls({i: None for i in problem.students})

    def to_dict(self) -> dict:
        return {"assignment": dict(self.assignment)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Matching":
        try:
            return cls(dict(data["assignment"]))
        except (KeyError, TypeError) as exc:
            raise ProblemError(f"malformed matching document: {exc}") from exc

    def __str__(self) -> str:
        return "{" + ", ".join(f"{i}->{s if s is not None else '-'}" for i, s in self.assignment.items()) + "}"


def validate_problem(problem: Problem) -> list[Violation]:
    """Return every invariant violation of ``problem``; empty means valid."""
    out: list[Violation] = []
    students = problem.students
    student_set = set(students)
    if len(student_set) != len(students):
        dup = sorted({i for i in students if students.count(i) > 1})
        out.extend(Violation("duplicate-student", i) for i in dup)
    school_ids = problem.school_ids
    if len(set(school_ids)) != len(school_ids):
        dup = sorted({s for s in school_ids if school_ids.count(s) > 1})
        out.extend(Violation("duplicate-school", s) for s in dup)
    for s, q in problem.schools:
        if not isinstance(q, int) or q < 0:
            out.append(Violation("negative-capacity", s, str(q)))
    for s in school_ids:
        order = problem.priorities.get(s)
        if order is None:
            out.append(Violation("missing-priority", s))
        elif len(order) != len(students) or set(order) != student_set:
            out.append(Violation("priority-not-permutation", s))
    for s in problem.priorities:
        if s not in set(school_ids):
            out.append(Violation("unknown-school-priority", s))
    for i in students:
        lst = problem.preferences.get(i)
        if lst is None:
            out.append(Violation("missing-preference", i))
            continue
        if len(set(lst)) != len(lst):
            out.append(Violation("duplicate-in-preference", i))
        for s in lst:
            if s not in problem.capacity:
                out.append(Violation("unknown-school-in-preference", i, s))
    for i in problem.preferences:
        if i not in student_set:
            out.append(Violation("unknown-student-preference", i))
    return out


def prefers(problem: Problem, student: StudentId, x: Optional[SchoolId], y: Optional[SchoolId]) -> bool:
    """True iff ``student`` strictly prefers ``x`` to ``y`` (``None`` = unassigned)."""
    if x == y:
        return False
    return problem.pref_rank(student, x) < problem.pref_rank(student, y)


def check_matching(problem: Problem, matching: Matching) -> None:
    """Raise :class:`ProblemError` unless ``matching`` is a capacity-respecting
    total map over the problem's ids."""
    if set(matching.assignment) != set(problem.students):
        raise ProblemError("matching is not a total map over the problem's students")
    for i, s in matching.assignment.items():
        if s is not None and s not in problem.capacity:
            raise ProblemError(f"student {i!r} assigned to unknown school {s!r}")
    for s, n in matching.load().items():
        if n > problem.capacity[s]:
            raise ProblemError(f"school {s!r} over capacity ({n} > {problem.capacity[s]})")


def is_individually_rational(problem: Problem, matching: Matching) -> bool:
    check_matching(problem, matching)
    return all(s is None or problem.acceptable(i, s) for i, s in matching.assignment.items())


def is_ordering(problem: Problem, ordering: Sequence[StudentId]) -> bool:
    return len(ordering) == len(problem.students) and set(ordering) == set(problem.students)


def check_ordering(problem: Problem, ordering: Sequence[StudentId]) -> tuple[StudentId, ...]:
    if not is_ordering(problem, ordering):
        raise ProblemError(f"ordering {list(ordering)} is not a permutation of the students")
    return tuple(ordering)


def load_problem(path: str | Path) -> Problem:
    return Problem.from_dict(json.loads(Path(path).read_text()))


def dump_problem(problem: Problem) -> str:
    return json.dumps(problem.to_dict(), indent=2) + "\n"


def load_matching(path: str | Path) -> Matching:
    return Matching.from_dict(json.loads(Path(path).read_text()))


def dump_matching(matching: Matching, problem: Optional[Problem] = None) -> str:
    if problem is not None:
        data = {"assignment": {i: matching[i] for i in problem.students}}
    else:
        data = matching.to_dict()
    return json.dumps(data, indent=2) + "\n"


# Fixtures -------------------------------------------------------------------

def fixture_a() -> Problem:
    """Two students, two unit schools; both want ``a``, only ``i1`` also accepts ``b``.

    Only the top of the priority at ``a`` matters; ``i2`` is placed after ``i1``
    everywhere.
    """
    return Problem.build(
        students=["i1", "i2"],
        schools=[("a", 1), ("b", 1)],
        priorities={"a": ["i1", "i2"], "b": ["i1", "i2"]},
        preferences={"i1": ["a", "b"], "i2": ["a"]},
    )


def fixture_b() -> Problem:
    """Four students, three unit schools, where FAM can beat every stable matching."""
    return Problem.build(
        students=["i", "j", "k", "h"],
        schools=[("a", 1), ("b", 1), ("c", 1)],
        priorities={
            "a": ["k", "i", "j", "h"],
            "b": ["k", "h", "j", "i"],
            "c": ["k", "h", "i", "j"],
        },
        preferences={"i": ["a", "b"], "j": ["c", "a"], "k": ["c", "a"], "h": ["c"]},
    )


def fixture_c() -> Problem:
    """Two students, two unit schools: ``i`` accepts ``a`` then ``b``, ``j`` only ``a``.

    Truncating ``i``'s list to ``a`` is a profitable misreport for a maximal
    mechanism that serves ``i`` first. Priorities put ``i`` ahead of ``j``.
    """
    return Problem.build(
        students=["i", "j"],
        schools=[("a", 1), ("b", 1)],
        priorities={"a": ["i", "j"], "b": ["i", "j"]},
        preferences={"i": ["a", "b"], "j": ["a"]},
    )


FIXTURE_C_MISREPORT: dict[StudentId, tuple[SchoolId, ...]] = {"i": ("a",)}

FIXTURES = {"fixtureA": fixture_a, "fixtureB": fixture_b, "fixtureC": fixture_c}


def matching_to_indices(problem: Problem, matching: Matching) -> list[Optional[int]]:
    sidx = problem.school_index
    return [None if matching[i] is None else sidx[matching[i]] for i in problem.students]


def matching_from_indices(problem: Problem, assigned: Sequence[Optional[int]]) -> Matching:
    ids = problem.school_ids
    return Matching({i: None if s is None else ids[s] for i, s in zip(problem.students, assigned)})
