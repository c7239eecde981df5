"""Axiom checks for matchings, with witnesses.

Every failed check carries a witness that can be re-validated on its own:
a blocking pair, a dominating matching, or an improving move.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from .assignment_core import (
    PreconditionError,
    find_improving_move,
    max_assignable_size,
)
from .core_model import (
    Matching,
    Problem,
    check_matching,
    matching_from_indices,
    prefers,
)

DEFAULT_STATE_CAP = 10**6

EXACT = "exact"
LEMMA = "lemma"


class CapExceeded(RuntimeError):
    """Exhaustive search would exceed its state budget."""

    def __init__(self, what: str, needed: Optional[int], cap: int):
        self.needed = needed
        self.cap = cap
        need = f"more than {cap}" if needed is None else str(needed)
        super().__init__(f"{what}: needs {need} states, cap is {cap}")


@dataclass(frozen=True)
class Verdict:
    axiom: str
    holds: Optional[bool]
    witness: Any = None
    note: str = ""

    def __bool__(self) -> bool:
        return bool(self.holds)

    def witness_json(self) -> Any:
        w = self.witness
        if isinstance(w, Matching):
            return w.to_dict()["assignment"]
        if hasattr(w, "to_dict"):
            return w.to_dict()
        if isinstance(w, tuple):
            return list(w)
        return w

    def line(self) -> str:
        verdict = {True: "true", False: "false", None: "error"}[self.holds]
        parts = [self.axiom, verdict]
        if self.witness is not None:
            parts.append(json.dumps(self.witness_json(), sort_keys=True))
        if self.note:
            parts.append(f"({self.note})")
        return " ".join(parts)


@dataclass(frozen=True)
class AuditReport:
    verdicts: tuple[Verdict, ...] = field(default_factory=tuple)

    def __getitem__(self, axiom: str) -> Verdict:
        for v in self.verdicts:
            if v.axiom == axiom:
                return v
        raise KeyError(axiom)

    def text(self) -> str:
        return "\n".join(v.line() for v in self.verdicts) + "\n"

    def to_dict(self) -> dict:
        return {
            v.axiom: {"holds": v.holds, "witness": v.witness_json(), **({"note": v.note} if v.note else {})}
            for v in self.verdicts
        }


def check_individually_rational(problem: Problem, matching: Matching) -> Verdict:
    check_matching(problem, matching)
    for i in problem.students:
        s = matching[i]
        if s is not None and not problem.acceptable(i, s):
            return Verdict("individually_rational", False, (i, s))
    return Verdict("individually_rational", True)


def check_non_wasteful(problem: Problem, matching: Matching) -> Verdict:
    """No student prefers a school that still has a free seat."""
    check_matching(problem, matching)
    load = matching.load()
    for i in problem.students:
        for s in problem.preferences[i]:
            if not prefers(problem, i, s, matching[i]):
                break
            if load.get(s, 0) < problem.capacity[s]:
                return Verdict("non_wasteful", False, (i, s))
    return Verdict("non_wasteful", True)


def _blocking(problem: Problem, matching: Matching, unassigned_only: bool):
    for i in problem.students:
        if unassigned_only and matching[i] is not None:
            continue
        for s in problem.preferences[i]:
            if not prefers(problem, i, s, matching[i]):
                break
            for j in matching.students_at(s):
                if problem.priority_rank(s, i) < problem.priority_rank(s, j):
                    return (i, s, j)
    return None


def check_fair(problem: Problem, matching: Matching) -> Verdict:
    """No student prefers a school holding someone of lower priority there."""
    check_matching(problem, matching)
    w = _blocking(problem, matching, unassigned_only=False)
    return Verdict("fair", w is None, w)


def check_fair_unassigned(problem: Problem, matching: Matching) -> Verdict:
    """Fairness restricted to unassigned students and schools they find acceptable."""
    check_matching(problem, matching)
    w = _blocking(problem, matching, unassigned_only=True)
    return Verdict("fair_for_unassigned", w is None, w)


def check_stable(problem: Problem, matching: Matching) -> Verdict:
    parts = (
        check_individually_rational(problem, matching),
        check_non_wasteful(problem, matching),
        check_fair(problem, matching),
    )
    failed = next((v for v in parts if not v.holds), None)
    if failed is None:
        return Verdict("stable", True)
    return Verdict("stable", False, failed.witness, note=f"{failed.axiom} fails")


def check_maximal(problem: Problem, matching: Matching) -> Verdict:
    check_matching(problem, matching)
    best = max_assignable_size(problem)
    return Verdict("maximal", matching.size == best, None, note=f"size {matching.size} of {best}")


def weakly_prefers(problem: Problem, i, x, y) -> bool:
    return x == y or prefers(problem, i, x, y)


def dominates(problem: Problem, mu: Matching, mu_prime: Matching) -> bool:
    """Every student weakly prefers ``mu`` and somebody strictly prefers it."""
    strict = False
    for i in problem.students:
        if prefers(problem, i, mu_prime[i], mu[i]):
            return False
        if mu[i] != mu_prime[i]:
            strict = True
    return strict


def size_wise_dominates(mu: Matching, mu_prime: Matching) -> bool:
    return mu.size > mu_prime.size


def enumerate_ir_matchings(problem: Problem, cap: Optional[int] = DEFAULT_STATE_CAP) -> Iterator[Matching]:
    """Every individually rational matching, by plain backtracking.

    Raises :class:`CapExceeded` once more than ``cap`` matchings were produced.
    """
    arrays = problem.arrays
    load = [0] * arrays.m
    current: list[Optional[int]] = [None] * arrays.n
    count = 0

    def rec(k: int):
        nonlocal count
        if k == arrays.n:
            count += 1
            if cap is not None and count > cap:
                raise CapExceeded("matching enumeration", None, cap)
            yield matching_from_indices(problem, current)
            return
        current[k] = None
        yield from rec(k + 1)
        for s in arrays.prefs[k]:
            if load[s] < arrays.cap[s]:
                load[s] += 1
                current[k] = s
                yield from rec(k + 1)
                load[s] -= 1
        current[k] = None

    yield from rec(0)


def check_efficient(problem: Problem, matching: Matching, mode: str = EXACT, cap: int = DEFAULT_STATE_CAP) -> Verdict:
    """Pareto efficiency among IR matchings.

    ``exact`` searches every IR matching for one that dominates; ``lemma``
    looks for an improving chain or cycle and only applies to maximal matchings.
    """
    check_matching(problem, matching)
    if mode == LEMMA:
        if matching.size != max_assignable_size(problem):
            raise PreconditionError("lemma mode needs a maximal matching")
        move = find_improving_move(problem, matching)
        if move is None:
            return Verdict("efficient", True, note=LEMMA)
        return Verdict("efficient", False, move, note=LEMMA)
    if mode != EXACT:
        raise ValueError(f"unknown efficiency mode {mode!r}")
    for other in enumerate_ir_matchings(problem, cap):
        if dominates(problem, other, matching):
            return Verdict("efficient", False, other, note=EXACT)
    return Verdict("efficient", True, note=EXACT)


def school_proposing_da(problem: Problem) -> Matching:
    """Deferred acceptance with schools proposing down their priority lists."""
    arrays = problem.arrays
    order = [sorted(range(arrays.n), key=lambda i: arrays.priority_rank[s][i]) for s in range(arrays.m)]
    nxt = [0] * arrays.m
    held: list[Optional[int]] = [None] * arrays.n
    count = [0] * arrays.m
    active = True
    while active:
        active = False
        for s in range(arrays.m):
            while count[s] < arrays.cap[s] and nxt[s] < arrays.n:
                i = order[s][nxt[s]]
                nxt[s] += 1
                active = True
                r = arrays.rank[i].get(s)
                if r is None:
                    continue
                cur = held[i]
                if cur is None or r < arrays.rank[i][cur]:
                    if cur is not None:
                        count[cur] -= 1
                    held[i] = s
                    count[s] += 1
    return matching_from_indices(problem, held)


def rural_hospital_gap(problem: Problem) -> int:
    from .mechanisms import run_da

    return abs(run_da(problem).size - school_proposing_da(problem).size)


def audit(problem: Problem, matching: Matching, cap: int = DEFAULT_STATE_CAP) -> AuditReport:
    """All axiom verdicts for ``matching``.

    Efficiency uses the improving-move test on maximal matchings (where it is
    exact) and exhaustive search otherwise.
    """
    maximal = check_maximal(problem, matching)
    ir = check_individually_rational(problem, matching)
    if not ir.holds:
        eff = Verdict("efficient", None, note="undefined for a matching that is not individually rational")
    elif maximal.holds:
        eff = check_efficient(problem, matching, LEMMA)
    else:
        try:
            eff = check_efficient(problem, matching, EXACT, cap)
        except CapExceeded as exc:
            eff = Verdict("efficient", None, note=str(exc))
    return AuditReport((
        ir,
        check_non_wasteful(problem, matching),
        check_fair(problem, matching),
        check_stable(problem, matching),
        check_fair_unassigned(problem, matching),
        maximal,
        eff,
    ))
