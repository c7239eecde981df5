"""School choice mechanisms as pure maps from a problem to a matching.

EAM and FAM are the assignment-maximizing families; DA, TTC, Boston and
serial dictatorship are the classic baselines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, Union

from .assignment_core import (
    SHORTEST,
    MovePolicy,
    _apply_idx,
    _greedy_idx,
    _positions,
    _select_idx,
    _shortest_move_idx,
    _student_indices,
    apply_move,
    find_improving_move,
    greedy_forced_set,
    improving_moves,
)
from .core_model import (
    Matching,
    Problem,
    SchoolId,
    StudentId,
    check_ordering,
    is_individually_rational,
    matching_from_indices,
)

EAM, FAM, DA, TTC, BOSTON, SD = "eam", "fam", "da", "ttc", "boston", "sd"
KINDS = (DA, TTC, BOSTON, SD, EAM, FAM)
NEEDS_ORDERING = (EAM, FAM, SD)

EARLIEST = "earliest"

# (unassigned student, school) -> chosen pair
PairPolicy = Callable[[Problem, Matching, list[tuple[StudentId, SchoolId]]], tuple[StudentId, SchoolId]]


@dataclass(frozen=True)
class Repair:
    student: StudentId
    school: SchoolId
    evicted: Optional[StudentId]


@dataclass(frozen=True)
class MechanismConfig:
    """Which mechanism to run and how it resolves its free choices.

    Instances are callable: ``config(problem)`` returns the matching.
    """

    kind: str
    ordering: Optional[tuple[StudentId, ...]] = None
    move_policy: Union[str, MovePolicy] = SHORTEST
    fam_pair_policy: Union[str, PairPolicy] = EARLIEST

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown mechanism {self.kind!r}; expected one of {KINDS}")
        if self.ordering is not None:
            object.__setattr__(self, "ordering", tuple(self.ordering))
        elif self.kind in NEEDS_ORDERING:
            raise ValueError(f"mechanism {self.kind!r} needs a student ordering")

    def __call__(self, problem: Problem) -> Matching:
        if self.kind == EAM:
            return run_eam(problem, self.ordering, self.move_policy)
        if self.kind == FAM:
            return run_fam(problem, self.ordering, self.move_policy, self.fam_pair_policy)
        if self.kind == SD:
            return run_sd(problem, self.ordering)
        return {DA: run_da, TTC: run_ttc, BOSTON: run_boston}[self.kind](problem)

    def describe(self) -> str:
        out = self.kind
        if self.ordering is not None:
            out += "[" + ",".join(self.ordering) + "]"
        return out


# EAM -------------------------------------------------------------------------

def _eam_fast(problem: Problem, ordering: Sequence[StudentId]) -> list[Optional[int]]:
    arrays = problem.arrays
    order = _student_indices(problem, ordering)
    position = _positions(problem, ordering)
    forced = set(_greedy_idx(arrays, order))
    assigned = _select_idx(arrays, order, forced)
    while True:
        move = _shortest_move_idx(arrays, assigned, position)
        if move is None:
            return assigned
        assigned = _apply_idx(assigned, move)


def run_eam(
    problem: Problem,
    ordering: Sequence[StudentId],
    move_policy: Union[str, MovePolicy] = SHORTEST,
    step1: Optional[Matching] = None,
) -> Matching:
    """Efficient assignment maximizing mechanism.

    Step 1 keeps, in ``ordering``, every student who can be assigned together
    with the students kept before, then picks one matching assigning exactly
    them. Step 2 applies improving chains and cycles until none is left.

    ``step1`` overrides the Step 1 selection; it must assign exactly the
    greedy forced set.
    """
    ordering = check_ordering(problem, ordering)
    if step1 is None and move_policy == SHORTEST:
        return matching_from_indices(problem, _eam_fast(problem, ordering))
    forced = greedy_forced_set(problem, ordering)
    if step1 is None:
        order = _student_indices(problem, ordering)
        mu = matching_from_indices(
            problem, _select_idx(problem.arrays, order, set(_student_indices(problem, forced)))
        )
    else:
        if not is_individually_rational(problem, step1):
            raise ValueError("step-1 matching is not individually rational")
        if {i for i in problem.students if step1[i] is not None} != set(forced):
            raise ValueError("step-1 matching must assign exactly the greedy forced set")
        mu = step1
    while True:
        move = find_improving_move(problem, mu, move_policy, ordering)
        if move is None:
            return mu
        mu = apply_move(problem, mu, move)


# FAM -------------------------------------------------------------------------

def unfair_unassigned_pairs(problem: Problem, matching: Matching) -> list[tuple[StudentId, SchoolId]]:
    """Pairs ``(i, s)``: ``i`` unassigned, ``s`` acceptable to ``i``, and ``s``
    holds someone ranked below ``i``."""
    out = []
    for i in problem.students:
        if matching[i] is not None:
            continue
        for s in problem.preferences[i]:
            if any(problem.priority_rank(s, i) < problem.priority_rank(s, j) for j in matching.students_at(s)):
                out.append((i, s))
    return out


def _earliest_pair(ordering: Sequence[StudentId]) -> PairPolicy:
    position = {i: k for k, i in enumerate(ordering)}

    def pick(problem: Problem, matching: Matching, pairs):
        # preferences are scanned best-first, so the first pair per student is their top one
        return min(pairs, key=lambda p: (position[p[0]], problem.pref_rank(p[0], p[1])))

    return pick


def _repair_once(problem: Problem, mu: Matching, pair: tuple[StudentId, SchoolId]) -> tuple[Matching, Optional[StudentId]]:
    i, s = pair
    holders = mu.students_at(s)
    changes: dict[StudentId, Optional[SchoolId]] = {i: s}
    evicted = None
    if len(holders) >= problem.capacity[s]:
        evicted = max(holders, key=lambda j: problem.priority_rank(s, j))
        changes[evicted] = None
    return mu.replace(changes), evicted


def fam_repair(
    problem: Problem,
    matching: Matching,
    ordering: Sequence[StudentId],
    pair_policy: Union[str, PairPolicy] = EARLIEST,
) -> tuple[Matching, list[Repair]]:
    """Seat unassigned students over lower-priority occupants until the
    matching is fair for unassigned students. Returns the matching and the
    sequence of repairs made."""
    if pair_policy == EARLIEST:
        pick = _earliest_pair(ordering)
    elif callable(pair_policy):
        pick = pair_policy
    else:
        raise ValueError(f"unknown FAM pair policy {pair_policy!r}")
    repairs: list[Repair] = []
    mu = matching
    while True:
        pairs = unfair_unassigned_pairs(problem, mu)
        if not pairs:
            return mu, repairs
        i, s = pick(problem, mu, pairs)
        if (i, s) not in pairs:
            raise ValueError(f"pair policy returned {(i, s)} which is not a violating pair")
        mu, evicted = _repair_once(problem, mu, (i, s))
        repairs.append(Repair(i, s, evicted))


def run_fam(
    problem: Problem,
    ordering: Sequence[StudentId],
    move_policy: Union[str, MovePolicy] = SHORTEST,
    pair_policy: Union[str, PairPolicy] = EARLIEST,
    step1: Optional[Matching] = None,
) -> Matching:
    """Fair assignment maximizing mechanism: EAM, then the unassigned-student repair loop."""
    mu = run_eam(problem, ordering, move_policy, step1=step1)
    return fam_repair(problem, mu, ordering, pair_policy)[0]


# Baselines -------------------------------------------------------------------

def run_da(problem: Problem) -> Matching:
    """Student-proposing deferred acceptance."""
    arrays = problem.arrays
    prio = arrays.priority_rank
    nxt = [0] * arrays.n
    held: list[list[int]] = [[] for _ in range(arrays.m)]
    free = list(range(arrays.n - 1, -1, -1))
    while free:
        i = free.pop()
        if nxt[i] >= len(arrays.prefs[i]):
            continue
        s = arrays.prefs[i][nxt[i]]
        nxt[i] += 1
        held[s].append(i)
        if len(held[s]) > arrays.cap[s]:
            worst = max(held[s], key=lambda j: prio[s][j])
            held[s].remove(worst)
            free.append(worst)
    assigned: list[Optional[int]] = [None] * arrays.n
    for s, students in enumerate(held):
        for i in students:
            assigned[i] = s
    return matching_from_indices(problem, assigned)


def run_ttc(problem: Problem) -> Matching:
    """Top trading cycles: students point to their best school with seats left,
    schools to their highest-priority remaining student."""
    arrays = problem.arrays
    cap = list(arrays.cap)
    remaining = set(range(arrays.n))
    assigned: list[Optional[int]] = [None] * arrays.n
    while remaining:
        points: dict[int, int] = {}
        for i in sorted(remaining):
            top = next((s for s in arrays.prefs[i] if cap[s] > 0), None)
            if top is None:
                remaining.discard(i)
            else:
                points[i] = top
        if not points:
            break
        school_points = {
            s: min(points, key=lambda i: arrays.priority_rank[s][i])
            for s in set(points.values())
        }
        # walk student -> school -> student until a node repeats
        in_cycle: set[int] = set()
        visited: set[int] = set()
        for start in points:
            if start in visited:
                continue
            path = []
            pos: dict[int, int] = {}
            i = start
            while i not in pos and i not in visited:
                pos[i] = len(path)
                path.append(i)
                i = school_points[points[i]]
            if i in pos:
                in_cycle.update(path[pos[i]:])
            visited.update(path)
        for i in in_cycle:
            s = points[i]
            assigned[i] = s
            cap[s] -= 1
            remaining.discard(i)
    return matching_from_indices(problem, assigned)


def run_boston(problem: Problem) -> Matching:
    """Immediate acceptance: in round ``k`` every unassigned student applies to
    their ``k``-th choice and schools accept by priority while seats last."""
    arrays = problem.arrays
    cap = list(arrays.cap)
    assigned: list[Optional[int]] = [None] * arrays.n
    rounds = max((len(p) for p in arrays.prefs), default=0)
    for k in range(rounds):
        applicants: dict[int, list[int]] = {}
        for i in range(arrays.n):
            if assigned[i] is None and k < len(arrays.prefs[i]):
                applicants.setdefault(arrays.prefs[i][k], []).append(i)
        for s, pool in applicants.items():
            pool.sort(key=lambda i: arrays.priority_rank[s][i])
            for i in pool[: cap[s]]:
                assigned[i] = s
            cap[s] -= min(cap[s], len(pool))
    return matching_from_indices(problem, assigned)


def run_sd(problem: Problem, ordering: Sequence[StudentId]) -> Matching:
    """Serial dictatorship: students pick their best school with a free seat in turn."""
    ordering = check_ordering(problem, ordering)
    arrays = problem.arrays
    cap = list(arrays.cap)
    assigned: list[Optional[int]] = [None] * arrays.n
    for i in _student_indices(problem, ordering):
        for s in arrays.prefs[i]:
            if cap[s] > 0:
                assigned[i] = s
                cap[s] -= 1
                break
    return matching_from_indices(problem, assigned)


# Outcome sets over all selections ---------------------------------------------

def _exact_assignments(problem: Problem, forced: frozenset[StudentId]) -> Iterator[Matching]:
    students = problem.students
    load = {s: 0 for s in problem.school_ids}
    current: dict[StudentId, Optional[SchoolId]] = {}

    def rec(k: int):
        if k == len(students):
            yield Matching(current)
            return
        i = students[k]
        if i not in forced:
            current[i] = None
            yield from rec(k + 1)
            return
        for s in problem.preferences[i]:
            if load[s] < problem.capacity[s]:
                load[s] += 1
                current[i] = s
                yield from rec(k + 1)
                load[s] -= 1

    yield from rec(0)


def eam_outcomes(problem: Problem, ordering: Sequence[StudentId]) -> set[Matching]:
    """Every matching some EAM mechanism with ``ordering`` can output: all
    Step 1 selections followed by all sequences of simple improving moves."""
    forced = greedy_forced_set(problem, ordering)
    out: set[Matching] = set()
    seen: set[Matching] = set()
    stack = list(_exact_assignments(problem, forced))
    while stack:
        mu = stack.pop()
        if mu in seen:
            continue
        seen.add(mu)
        moves = improving_moves(problem, mu)
        if not moves:
            out.add(mu)
        stack.extend(apply_move(problem, mu, mv) for mv in moves)
    return out


def fam_outcomes(problem: Problem, ordering: Sequence[StudentId]) -> set[Matching]:
    """Every matching some FAM mechanism with ``ordering`` can output."""
    out: set[Matching] = set()
    seen: set[Matching] = set()
    stack = list(eam_outcomes(problem, ordering))
    while stack:
        mu = stack.pop()
        if mu in seen:
            continue
        seen.add(mu)
        pairs = unfair_unassigned_pairs(problem, mu)
        if not pairs:
            out.add(mu)
        for pair in pairs:
            stack.append(_repair_once(problem, mu, pair)[0])
    return out


