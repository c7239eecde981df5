"""Reproducible checks of the mechanisms' headline properties.

Each ``check_*`` function runs one claim on its fixture or seeded corpus and
returns a :class:`ClaimResult` whose text is deterministic, so two runs can
be compared byte for byte.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .assignment_core import find_improving_move, max_assignable_size
from .audit import (
    check_efficient,
    check_fair_unassigned,
    check_individually_rational,
    check_stable,
    dominates,
    enumerate_ir_matchings,
    rural_hospital_gap,
)
from .core_model import (
    FIXTURE_C_MISREPORT,
    Matching,
    Problem,
    fixture_a,
    fixture_b,
    fixture_c,
)
from .corpus import all_profiles, random_corpus, random_orderings, random_problem
from .game import (
    ReportGame,
    equilibrium_size_bounds,
    manipulation_size_effect,
    nested_sincere_chain,
    sincerity_sweep,
)
from .mechanisms import (
    BOSTON,
    DA,
    EAM,
    FAM,
    SD,
    TTC,
    MechanismConfig,
    fam_outcomes,
    run_boston,
    run_da,
    run_eam,
    run_fam,
    run_sd,
    run_ttc,
)


@dataclass
class ClaimResult:
    name: str
    lines: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, ok: bool, message: str) -> bool:
        self.lines.append(("ok   " if ok else "FAIL ") + message)
        if not ok:
            self.failures.append(message)
        return ok

    def fail(self, message: str) -> None:
        self.lines.append("FAIL " + message)
        self.failures.append(message)

    def text(self) -> str:
        head = f"{self.name}: {'pass' if self.passed else 'fail'}"
        return "\n".join([head] + ["  " + line for line in self.lines]) + "\n"


# Corpora ---------------------------------------------------------------------

CORPUS_SEED = 20240101
CORPUS_COUNT = 1000
CORPUS_ORDERINGS = 3
GAME_SEED = 7
GAME_COUNT = 60
SWEEP_SEED = 99
SWEEP_COUNT = 200


def mechanism_corpus(count: int = CORPUS_COUNT, seed: int = CORPUS_SEED):
    """``(problem, orderings)`` pairs: n <= 6, m <= 4, capacities <= 2."""
    rng = random.Random(seed + 1)
    for problem in random_corpus(count, max_students=6, max_schools=4, max_capacity=2, seed=seed, min_students=2):
        yield problem, random_orderings(problem.students, CORPUS_ORDERINGS, rng)


def is_small(problem: Problem) -> bool:
    return len(problem.students) <= 5 and len(problem.schools) <= 3


def game_family(count: int = GAME_COUNT, seed: int = GAME_SEED):
    """``(problem, ordering)`` pairs over 2-3 students and 2-3 schools."""
    rng = random.Random(seed)
    for _ in range(count):
        n, m = rng.choice((2, 3)), rng.choice((2, 3))
        problem = random_problem(n, m, (1, 2), rng.choice((0.5, 0.8, 1.0)), rng=rng)
        yield problem, tuple(rng.sample(problem.students, n))


def sweep_family(count: int = SWEEP_COUNT, seed: int = SWEEP_SEED):
    """``(problem, ordering, nested sincere chain)`` triples, n in 2..4."""
    rng = random.Random(seed)
    for _ in range(count):
        n, m = rng.choice((2, 3, 4)), rng.choice((2, 3))
        problem = random_problem(n, m, (1, 2), rng.choice((0.5, 0.8, 1.0)), rng=rng)
        ordering = tuple(rng.sample(problem.students, n))
        yield problem, ordering, nested_sincere_chain(problem.students, rng)


# Scripted FAM selector on fixture B --------------------------------------------

FIXTURE_B_ORDERING = ("k", "j", "i", "h")


class ScriptedFixtureB:
    """A FAM mechanism on fixture B whose free selections are fixed by a table.

    Truthful reports give ``i->b, j->a, k->c``. If only ``i`` misreports, ``k``
    takes ``a`` and ``h`` takes ``c``; ``i`` keeps ``b`` when the report lists
    ``b`` and is left out otherwise. Every other profile, including any
    misreport by ``h``, runs the default FAM with ordering ``k, j, i, h``
    (when ``h`` lists ``b``, FAM must seat ``h`` there over ``i``, so keeping
    the truthful outcome would not be a FAM selection).
    """

    def __init__(self) -> None:
        self.truth = fixture_b()

    mu = {"i": "b", "j": "a", "k": "c", "h": None}
    mu_b_listed = {"i": "b", "j": None, "k": "a", "h": "c"}
    mu_b_unlisted = {"i": None, "j": None, "k": "a", "h": "c"}

    def scripted(self, reported: Problem) -> Optional[Matching]:
        changed = {x for x in self.truth.students if reported.preferences[x] != self.truth.preferences[x]}
        if not changed:
            return Matching(self.mu)
        if changed == {"i"}:
            return Matching(self.mu_b_listed if "b" in reported.preferences["i"] else self.mu_b_unlisted)
        return None

    def __call__(self, reported: Problem) -> Matching:
        out = self.scripted(reported)
        return out if out is not None else run_fam(reported, FIXTURE_B_ORDERING)


# Claims ----------------------------------------------------------------------

def check_prop1() -> ClaimResult:
    res = ClaimResult("prop1")
    p = fixture_a()
    best = max_assignable_size(p)
    res.check(best == 2, f"max assignable size on fixture A = {best} (expect 2)")
    for name, mu in (
        ("da", run_da(p)),
        ("ttc", run_ttc(p)),
        ("boston", run_boston(p)),
        ("sd[i1,i2]", run_sd(p, ("i1", "i2"))),
    ):
        res.check(mu.size == 1 and mu.size < best, f"{name} matches {mu.size} of {best}: {mu}")
    eam = run_eam(p, ("i1", "i2"))
    res.check(eam.size == 2, f"eam[i1,i2] matches {eam.size}: {eam}")
    return res


def _eam_checks(res: ClaimResult, problem: Problem, ordering, tag: str, exhaustive: bool) -> Matching:
    mu = run_eam(problem, ordering)
    best = max_assignable_size(problem)
    if not check_individually_rational(problem, mu).holds:
        res.fail(f"{tag}: eam output not individually rational")
    if mu.size != best:
        res.fail(f"{tag}: eam size {mu.size} != {best}")
    elif find_improving_move(problem, mu, ordering=ordering) is not None:
        res.fail(f"{tag}: eam output admits an improving move")
    if exhaustive and not check_efficient(problem, mu, "exact").holds:
        res.fail(f"{tag}: eam output dominated")
    return mu


def check_thm1(count: int = CORPUS_COUNT) -> ClaimResult:
    res = ClaimResult("thm1")
    runs = exhaustive = 0
    for n, (problem, orderings) in enumerate(mechanism_corpus(count)):
        small = is_small(problem)
        for o in orderings:
            _eam_checks(res, problem, o, f"problem {n} ordering {','.join(o)}", small)
            runs += 1
            exhaustive += small
    res.lines.append(f"eam runs {runs}, exhaustive efficiency checks {exhaustive}")
    res.check(not res.failures, "eam outputs are individually rational, maximal and efficient")
    return res


def check_thm2(count: int = CORPUS_COUNT) -> ClaimResult:
    res = ClaimResult("thm2")
    runs = 0
    for n, (problem, orderings) in enumerate(mechanism_corpus(count)):
        best = max_assignable_size(problem)
        for o in orderings:
            tag = f"problem {n} ordering {','.join(o)}"
            eam, fam = run_eam(problem, o), run_fam(problem, o)
            runs += 1
            if not check_individually_rational(problem, fam).holds:
                res.fail(f"{tag}: fam output not individually rational")
            if fam.size != best or fam.size != eam.size:
                res.fail(f"{tag}: fam size {fam.size}, eam {eam.size}, max {best}")
            if not check_fair_unassigned(problem, fam).holds:
                res.fail(f"{tag}: fam output unfair to an unassigned student")
    res.lines.append(f"fam runs {runs}")
    res.check(not res.failures, "fam outputs are maximal, fair for unassigned students, and as large as eam")
    return res


def check_prop5(count: int = GAME_COUNT) -> ClaimResult:
    res = ClaimResult("prop5")
    eq_total = 0
    for n, (problem, o) in enumerate(game_family(count)):
        sd = run_sd(problem, o)
        eqs = ReportGame(MechanismConfig(EAM, o), problem).equilibria()
        eq_total += len(eqs)
        if not eqs:
            res.fail(f"problem {n}: eam has no equilibrium")
        bad = [e for e in eqs if e.outcome != sd]
        if bad:
            res.fail(f"problem {n}: eam equilibrium outcome {bad[0].outcome} != sd {sd}")
        if not ReportGame(MechanismConfig(FAM, o), problem).equilibria():
            res.fail(f"problem {n}: fam has no equilibrium")
    res.lines.append(f"problems {count}, eam equilibria {eq_total}")
    res.check(not res.failures, "eam equilibria exist and all equal serial dictatorship; fam equilibria exist")
    return res


def verify_scripted_fixture_b(res: ClaimResult) -> None:
    truth = fixture_b()
    psi = ScriptedFixtureB()
    game = ReportGame(psi, truth)
    honest = game.truthful()
    outcome = game.outcome(honest)
    da = run_da(truth)
    res.check(game.is_equilibrium(honest), "scripted fam: truth-telling is an equilibrium on fixture B")
    res.check(outcome.size == 3 and da.size == 2, f"scripted fam matches {outcome.size}, da matches {da.size}")
    # every scripted outcome must be reachable by some FAM selection
    checked = 0
    for k, student in enumerate(truth.students):
        for r in range(game.radix[k]):
            profile = honest[:k] + (r,) + honest[k + 1:]
            reported = truth.with_preferences(game.reports_of(profile))
            scripted = psi.scripted(reported)
            if scripted is None:
                continue
            checked += 1
            if scripted not in fam_outcomes(reported, FIXTURE_B_ORDERING):
                res.check(False, f"scripted outcome {scripted} unreachable by fam at {game.reports_of(profile)}")
                return
    res.check(True, f"{checked} scripted outcomes are reachable by fam selections")


def check_thm4(count: int = GAME_COUNT) -> ClaimResult:
    res = ClaimResult("thm4")
    for n, (problem, o) in enumerate(game_family(count)):
        da = run_da(problem).size
        gap = rural_hospital_gap(problem)
        if gap:
            res.fail(f"problem {n}: rural hospital gap {gap}")
        eqs = ReportGame(MechanismConfig(FAM, o), problem).equilibria()
        if not eqs:
            res.fail(f"problem {n}: fam has no equilibrium")
            continue
        small = min(eqs, key=lambda e: e.outcome.size)
        if small.outcome.size < da:
            reports = ", ".join(f"{i}:{','.join(r) or '-'}" for i, r in small.profile.items())
            res.fail(
                f"problem {n} ordering {','.join(o)}: fam equilibrium [{reports}] gives {small.outcome} "
                f"of size {small.outcome.size} < da {da}"
            )
    res.check(not res.failures, f"(i) on {count} problems every fam equilibrium matches at least |da(truth)|")
    verify_scripted_fixture_b(res)
    return res


def check_prop6(count: int = GAME_COUNT) -> ClaimResult:
    res = ClaimResult("prop6")
    deviations = 0
    for n, (problem, o) in enumerate(game_family(count)):
        for kind in (EAM, FAM):
            for entry in manipulation_size_effect(MechanismConfig(kind, o), problem):
                deviations += 1
                if entry.size_after > entry.size_before:
                    res.fail(f"problem {n} {kind}: {entry}")
    res.lines.append(f"profitable deviations examined {deviations}")
    res.check(not res.failures, "no profitable misreport increases the matched count")
    p = fixture_c()
    for kind in (EAM, FAM):
        effects = manipulation_size_effect(MechanismConfig(kind, ("i", "j")), p)
        hit = [e for e in effects if e.student == "i" and e.deviation == FIXTURE_C_MISREPORT["i"]]
        res.check(
            bool(hit) and (hit[0].size_before, hit[0].size_after) == (2, 1),
            f"fixture C {kind}: i misreports a-only, sizes "
            + (f"{hit[0].size_before} -> {hit[0].size_after}" if hit else "n/a"),
        )
    return res


def check_cor1(count: int = SWEEP_COUNT) -> ClaimResult:
    res = ClaimResult("cor1")
    converged = nonconverged = 0
    for n, (problem, o, chain) in enumerate(sweep_family(count)):
        for kind in (EAM, FAM):
            points = sincerity_sweep(MechanismConfig(kind, o), problem, chain, order=o)
            ok = [pt for pt in points if pt.converged]
            converged += len(ok)
            nonconverged += len(points) - len(ok)
            counts = [pt.matched for pt in ok]
            if any(b < a for a, b in zip(counts, counts[1:])):
                res.fail(f"problem {n} {kind}: matched counts {counts} along the sincere chain")
    res.lines.append(f"converged runs {converged}, non-convergent runs {nonconverged} (not asserted)")
    res.check(not res.failures, "matched count never drops as the sincere set grows")
    return res


def _market_problems(market: Problem) -> list[Problem]:
    return list(all_profiles(market))


def zoo_markets() -> list[tuple[Problem, tuple[str, ...]]]:
    two = Problem.build(["i1", "i2"], [("a", 1), ("b", 1)], {"a": ["i1", "i2"], "b": ["i2", "i1"]}, {"i1": [], "i2": []})
    three = Problem.build(
        ["i1", "i2", "i3"],
        [("a", 1), ("b", 1)],
        {"a": ["i3", "i1", "i2"], "b": ["i2", "i3", "i1"]},
        {"i1": [], "i2": [], "i3": []},
    )
    return [(two, ("i1", "i2")), (three, ("i1", "i2", "i3"))]


def check_zoo() -> ClaimResult:
    """Zoo-restricted check: no implemented mechanism size-wise dominates EAM in equilibrium."""
    res = ClaimResult("zoo")
    for market, o in zoo_markets():
        problems = _market_problems(market)
        zoo = {
            "da": MechanismConfig(DA),
            "ttc": MechanismConfig(TTC),
            "boston": MechanismConfig(BOSTON),
            "sd": MechanismConfig(SD, o),
            "sd-reversed": MechanismConfig(SD, tuple(reversed(o))),
            "fam": MechanismConfig(FAM, o),
        }
        eam_bounds = [equilibrium_size_bounds(MechanismConfig(EAM, o), p) for p in problems]
        for name, phi in zoo.items():
            phi_bounds = [equilibrium_size_bounds(phi, p) for p in problems]
            pairs = [(a, b) for a, b in zip(phi_bounds, eam_bounds) if a is not None and b is not None]
            weak = all(a[0] >= b[1] for a, b in pairs)
            strict = any(a[0] > b[1] for a, b in pairs)
            res.check(
                not (weak and strict),
                f"{len(market.students)}x{len(market.schools)} market, {len(problems)} profiles: "
                f"{name} does not size-wise dominate eam in equilibrium "
                f"(problems without equilibria: {len(problems) - len(pairs)})",
            )
    return res


def check_moves(count: int = CORPUS_COUNT) -> ClaimResult:
    res = ClaimResult("moves")
    problems = 0
    for n, (problem, _) in enumerate(mechanism_corpus(count)):
        if not is_small(problem):
            continue
        problems += 1
        for msg in lemma_equivalence(problem):
            res.fail(f"problem {n}: {msg}")
    res.check(not res.failures, f"on {problems} small problems: no improving move <=> undominated, for every maximal matching")
    return res


CLAIMS: dict[str, Callable[[], ClaimResult]] = {
    "prop1": check_prop1,
    "thm1": check_thm1,
    "moves": check_moves,
    "thm2": check_thm2,
    "zoo": check_zoo,
    "prop5": check_prop5,
    "thm4": check_thm4,
    "prop6": check_prop6,
    "cor1": check_cor1,
}


def lemma_equivalence(problem: Problem) -> list[str]:
    """Compare the improving-move test with exhaustive domination on every
    maximal IR matching of ``problem``; returns disagreements."""
    matchings = list(enumerate_ir_matchings(problem))
    best = max(m.size for m in matchings)
    out = []
    for mu in matchings:
        if mu.size != best:
            continue
        no_move = find_improving_move(problem, mu) is None
        undominated = not any(dominates(problem, other, mu) for other in matchings)
        if no_move != undominated:
            out.append(f"{mu}: no-move={no_move} undominated={undominated}")
    return out


def stable_sizes(problem: Problem) -> set[int]:
    return {m.size for m in enumerate_ir_matchings(problem) if check_stable(problem, m).holds}
