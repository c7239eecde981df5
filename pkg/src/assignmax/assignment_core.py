"""Maximum-cardinality machinery behind the assignment-maximizing mechanisms.

Feasibility of a forced set is an augmenting-path search over school seats
(a b-matching where each school may hold up to its capacity). The greedy
forced set is the matroid greedy over the transversal matroid induced by the
student/acceptable-school graph, so its size is always the maximum.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Collection, Iterable, Iterator, Optional, Sequence

from .core_model import (
    Matching,
    Problem,
    ProblemArrays,
    ProblemError,
    StudentId,
    SchoolId,
    check_matching,
    check_ordering,
    is_individually_rational,
    matching_from_indices,
    matching_to_indices,
)

CHAIN = "chain"
CYCLE = "cycle"


class PreconditionError(ValueError):
    """An operation was called outside the scope where its contract holds."""


class InvalidMoveError(ValueError):
    pass


class _SeatMatcher:
    """Incremental augmenting-path b-matching of students into school seats."""

    def __init__(self, arrays: ProblemArrays, cap: Optional[Sequence[int]] = None):
        self.prefs = arrays.prefs
        self.cap = list(arrays.cap if cap is None else cap)
        self.holders: list[list[int]] = [[] for _ in range(arrays.m)]
        self.school_of: list[Optional[int]] = [None] * arrays.n

    def _augment(self, i: int, seen: list[bool]) -> bool:
        for s in self.prefs[i]:
            if seen[s]:
                continue
            seen[s] = True
            if len(self.holders[s]) < self.cap[s]:
                self._seat(i, s)
                return True
            for j in list(self.holders[s]):
                if self._augment(j, seen):
                    # j moved elsewhere; i takes the freed seat at s
                    self._seat(i, s)
                    return True
        return False

    def _seat(self, i: int, s: int) -> None:
        old = self.school_of[i]
        if old is not None and i in self.holders[old]:
            self.holders[old].remove(i)
        self.school_of[i] = s
        self.holders[s].append(i)

    def add(self, i: int) -> bool:
        """Try to add student ``i`` keeping everyone already seated assigned."""
        if self.school_of[i] is not None:
            return True
        return self._augment(i, [False] * len(self.holders))


def _feasible_idx(arrays: ProblemArrays, forced: Iterable[int], cap: Optional[Sequence[int]] = None) -> bool:
    matcher = _SeatMatcher(arrays, cap)
    return all(matcher.add(i) for i in forced)


def _student_indices(problem: Problem, students: Iterable[StudentId]) -> list[int]:
    idx = problem.student_index
    try:
        return [idx[i] for i in students]
    except KeyError as exc:
        raise ProblemError(f"unknown student {exc.args[0]!r}") from None


def max_assignable_size(problem: Problem) -> int:
    """Largest number of students that an individually rational matching assigns."""
    matcher = _SeatMatcher(problem.arrays)
    return sum(matcher.add(i) for i in range(problem.arrays.n))


def feasible(problem: Problem, forced: Collection[StudentId]) -> bool:
    """True iff some IR matching assigns every student in ``forced``."""
    return _feasible_idx(problem.arrays, _student_indices(problem, forced))


def _greedy_idx(arrays: ProblemArrays, order: Sequence[int]) -> list[int]:
    matcher = _SeatMatcher(arrays)
    return [i for i in order if matcher.add(i)]


def greedy_forced_set(problem: Problem, ordering: Sequence[StudentId]) -> frozenset[StudentId]:
    """Scan ``ordering`` and keep each student whose addition stays feasible.

    Augmenting from the new student in the current seat matching succeeds
    exactly when the enlarged set is feasible, so this is the sequential
    filtering of the candidate matching sets done incrementally.
    """
    ordering = check_ordering(problem, ordering)
    kept = _greedy_idx(problem.arrays, _student_indices(problem, ordering))
    return frozenset(problem.students[i] for i in kept)


def _select_idx(arrays: ProblemArrays, order: Sequence[int], forced: Collection[int]) -> list[Optional[int]]:
    queue = [i for i in order if i in forced]
    cap = list(arrays.cap)
    assigned: list[Optional[int]] = [None] * arrays.n
    for pos, i in enumerate(queue):
        rest = queue[pos + 1:]
        for s in arrays.prefs[i]:
            if cap[s] == 0:
                continue
            cap[s] -= 1
            if _feasible_idx(arrays, rest, cap):
                assigned[i] = s
                break
            cap[s] += 1
        else:
            raise PreconditionError("forced set is not feasible")
    return assigned


def select_step1_matching(
    problem: Problem, ordering: Sequence[StudentId], forced: Collection[StudentId]
) -> Matching:
    """Assign exactly ``forced``: walking ``ordering``, each forced student takes
    their best school that still leaves the remaining forced students assignable."""
    ordering = check_ordering(problem, ordering)
    forced_idx = set(_student_indices(problem, forced))
    if not _feasible_idx(problem.arrays, forced_idx):
        raise PreconditionError("forced set is not feasible")
    order = _student_indices(problem, ordering)
    return matching_from_indices(problem, _select_idx(problem.arrays, order, forced_idx))


# Improving chains and cycles -------------------------------------------------

@dataclass(frozen=True)
class Hop:
    student: StudentId
    from_school: SchoolId
    to_school: SchoolId


@dataclass(frozen=True)
class ImprovingMove:
    """A chain or cycle of students each moving to a school they prefer.

    In a chain, hop ``k`` frees the seat that hop ``k-1`` moves into and the
    last hop moves into a school with a free seat. A cycle wraps around.
    """

    kind: str
    hops: tuple[Hop, ...]

    @property
    def terminal(self) -> Optional[SchoolId]:
        return self.hops[-1].to_school if self.kind == CHAIN else None

    @property
    def students(self) -> tuple[StudentId, ...]:
        return tuple(h.student for h in self.hops)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "hops": [[h.student, h.from_school, h.to_school] for h in self.hops],
        }

    def __str__(self) -> str:
        body = ", ".join(f"{h.student}: {h.from_school}->{h.to_school}" for h in self.hops)
        return f"{self.kind}[{body}]"


# (kind, hops) with hops as (student, from, to) index triples
_RawMove = tuple[str, tuple[tuple[int, int, int], ...]]


def _move_graph(arrays: ProblemArrays, assigned: Sequence[Optional[int]]):
    load = [0] * arrays.m
    edges: list[list[tuple[int, int]]] = [[] for _ in range(arrays.m)]
    for i, s in enumerate(assigned):
        if s is None:
            continue
        load[s] += 1
        r = arrays.rank[i][s]
        for t in arrays.prefs[i][:r]:
            edges[s].append((t, i))
    slack = [load[s] < arrays.cap[s] for s in range(arrays.m)]
    return edges, slack


def _dist_to_slack(edges, slack) -> list[float]:
    m = len(slack)
    rev: list[list[int]] = [[] for _ in range(m)]
    for u in range(m):
        for v, _ in edges[u]:
            rev[v].append(u)
    dist = [float("inf")] * m
    queue = deque()
    for s in range(m):
        if slack[s]:
            dist[s] = 0
            queue.append(s)
    while queue:
        v = queue.popleft()
        for u in rev[v]:
            if dist[u] == float("inf"):
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _enumerate_moves(arrays: ProblemArrays, assigned: Sequence[Optional[int]], max_len: Optional[int] = None) -> Iterator[_RawMove]:
    """Yield every simple improving chain and cycle (schools pairwise distinct).

    Cycles are yielded once per rotation; callers normalise if needed.
    """
    edges, slack = _move_graph(arrays, assigned)
    dist = _dist_to_slack(edges, slack)
    limit = arrays.m if max_len is None else max_len

    def extend(start: int, u: int, path: list[tuple[int, int, int]], visited: set[int]):
        for v, i in edges[u]:
            hop = (i, u, v)
            if v == start and len(path) >= 1:
                yield CYCLE, tuple(path + [hop])
                continue
            if v in visited:
                continue
            if slack[v]:
                yield CHAIN, tuple(path + [hop])
            if len(path) + 1 < limit and (dist[v] < float("inf") or start in _reachable_from(v)):
                visited.add(v)
                path.append(hop)
                yield from extend(start, v, path, visited)
                path.pop()
                visited.discard(v)

    _reach_cache: dict[int, set[int]] = {}

    def _reachable_from(v: int) -> set[int]:
        if v not in _reach_cache:
            seen = {v}
            stack = [v]
            while stack:
                u = stack.pop()
                for w, _ in edges[u]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            _reach_cache[v] = seen
        return _reach_cache[v]

    for start in range(arrays.m):
        yield from extend(start, start, [], {start})


def _shortest_len(arrays: ProblemArrays, assigned: Sequence[Optional[int]]) -> Optional[int]:
    edges, slack = _move_graph(arrays, assigned)
    dist = _dist_to_slack(edges, slack)
    best = float("inf")
    for u in range(arrays.m):
        for v, _ in edges[u]:
            best = min(best, 1 + dist[v])
    # shortest cycle through each node
    for u in range(arrays.m):
        d = {u: 0}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for y, _ in edges[x]:
                if y == u:
                    best = min(best, d[x] + 1)
                elif y not in d:
                    d[y] = d[x] + 1
                    queue.append(y)
    return None if best == float("inf") else int(best)


def _canonical(move: _RawMove, position: Sequence[int]) -> _RawMove:
    kind, hops = move
    if kind == CYCLE:
        k = min(range(len(hops)), key=lambda t: position[hops[t][0]])
        hops = hops[k:] + hops[:k]
    return kind, hops


def _move_key(move: _RawMove, position: Sequence[int]):
    kind, hops = move
    return (len(hops), sorted(position[h[0]] for h in hops), kind, [position[h[0]] for h in hops], [h[2] for h in hops])


def _shortest_move_idx(arrays: ProblemArrays, assigned: Sequence[Optional[int]], position: Sequence[int]) -> Optional[_RawMove]:
    length = _shortest_len(arrays, assigned)
    if length is None:
        return None
    candidates = [
        _canonical(mv, position)
        for mv in _enumerate_moves(arrays, assigned, max_len=length)
        if len(mv[1]) == length
    ]
    return min(candidates, key=lambda mv: _move_key(mv, position))


def _apply_idx(assigned: list[Optional[int]], move: _RawMove) -> list[Optional[int]]:
    out = list(assigned)
    for i, _, t in move[1]:
        out[i] = t
    return out


def _to_move(problem: Problem, raw: _RawMove) -> ImprovingMove:
    ids = problem.school_ids
    return ImprovingMove(
        raw[0], tuple(Hop(problem.students[i], ids[u], ids[v]) for i, u, v in raw[1])
    )


MovePolicy = Callable[[Problem, Matching, list[ImprovingMove]], ImprovingMove]

SHORTEST = "shortest"
MOVE_POLICIES = (SHORTEST,)


def _require_maximal(problem: Problem, matching: Matching) -> None:
    if not is_individually_rational(problem, matching):
        raise PreconditionError("matching is not individually rational")
    if matching.size != max_assignable_size(problem):
        raise PreconditionError(
            f"matching assigns {matching.size} < {max_assignable_size(problem)} students; "
            "improving moves are only defined for maximal matchings"
        )


def improving_moves(problem: Problem, matching: Matching) -> list[ImprovingMove]:
    """All simple improving chains and cycles of a maximal IR matching.

    Each cycle is listed once, rotated so its earliest student (in the problem's
    student order) comes first.
    """
    _require_maximal(problem, matching)
    position = list(range(problem.arrays.n))
    assigned = matching_to_indices(problem, matching)
    seen = set()
    out = []
    for raw in _enumerate_moves(problem.arrays, assigned):
        raw = _canonical(raw, position)
        if raw not in seen:
            seen.add(raw)
            out.append(_to_move(problem, raw))
    return out


def find_improving_move(
    problem: Problem,
    matching: Matching,
    policy: str | MovePolicy = SHORTEST,
    ordering: Optional[Sequence[StudentId]] = None,
) -> Optional[ImprovingMove]:
    """Return an improving chain or cycle of ``matching``, or ``None`` if there is none.

    ``matching`` must be maximal; for such matchings ``None`` means efficient.
    The default policy takes a shortest move, ties broken by the positions in
    ``ordering`` (default: problem order) of the students involved.
    """
    _require_maximal(problem, matching)
    ordering = problem.students if ordering is None else check_ordering(problem, ordering)
    if callable(policy):
        moves = improving_moves(problem, matching)
        return policy(problem, matching, moves) if moves else None
    if policy != SHORTEST:
        raise ValueError(f"unknown move policy {policy!r}")
    position = _positions(problem, ordering)
    raw = _shortest_move_idx(problem.arrays, matching_to_indices(problem, matching), position)
    return None if raw is None else _to_move(problem, raw)


def _positions(problem: Problem, ordering: Sequence[StudentId]) -> list[int]:
    pos = [0] * len(ordering)
    idx = problem.student_index
    for k, i in enumerate(ordering):
        pos[idx[i]] = k
    return pos


def apply_move(problem: Problem, matching: Matching, move: ImprovingMove) -> Matching:
    """Move every hop's student to the hop's target school."""
    check_matching(problem, matching)
    hops = move.hops
    if not hops:
        raise InvalidMoveError("empty move")
    if len({h.student for h in hops}) != len(hops):
        raise InvalidMoveError("a student appears twice in the move")
    for h in hops:
        if matching[h.student] != h.from_school:
            raise InvalidMoveError(f"{h.student} is not at {h.from_school}")
        if not (problem.acceptable(h.student, h.to_school)
                and problem.pref_rank(h.student, h.to_school) < problem.pref_rank(h.student, h.from_school)):
            raise InvalidMoveError(f"{h.student} does not prefer {h.to_school} to {h.from_school}")
    for a, b in zip(hops, hops[1:]):
        if a.to_school != b.from_school:
            raise InvalidMoveError(f"hop {a} does not lead into hop {b}")
    if move.kind == CYCLE:
        if hops[-1].to_school != hops[0].from_school or len(hops) < 2:
            raise InvalidMoveError("cycle does not wrap around")
    elif move.kind == CHAIN:
        end = hops[-1].to_school
        if len(matching.students_at(end)) >= problem.capacity[end]:
            raise InvalidMoveError(f"chain ends at {end} which has no free seat")
    else:
        raise InvalidMoveError(f"unknown move kind {move.kind!r}")
    out = matching.replace({h.student: h.to_school for h in hops})
    check_matching(problem, out)
    return out
