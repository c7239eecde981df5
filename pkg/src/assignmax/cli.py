"""Command line entry point: ``assignmax {run,audit,equilibria,gen,repro,fixture}``.

Machine-readable results go to stdout, human-readable notes to stderr. The
exit status is 0 exactly when every check made by the command holds.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from .assignment_core import MOVE_POLICIES, SHORTEST
from .audit import DEFAULT_STATE_CAP, CapExceeded, audit
from .core_model import (
    FIXTURES,
    Problem,
    ProblemError,
    dump_matching,
    dump_problem,
    load_matching,
    load_problem,
    validate_problem,
)
from .corpus import random_problem
from .game import DEFAULT_PROFILE_CAP, ReportGame
from .mechanisms import EARLIEST, KINDS, NEEDS_ORDERING, MechanismConfig


@dataclass
class RunManifest:
    input: str
    mechanism: Optional[str]
    output: Optional[str]
    seed: Optional[int]
    cap: Optional[int]


def _emit(data: dict, fmt: str, text: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)


def _note(message: str) -> None:
    sys.stderr.write(message.rstrip("\n") + "\n")


def read_problem(source: str) -> Problem:
    """A problem file path, or a fixture name such as ``fixtureA``."""
    if source in FIXTURES and not Path(source).exists():
        problem = FIXTURES[source]()
    else:
        problem = load_problem(source)
    violations = validate_problem(problem)
    if violations:
        raise ProblemError("invalid problem: " + ", ".join(map(str, violations)))
    return problem


def mechanism_from_args(args, problem: Problem) -> MechanismConfig:
    ordering = None
    if args.ordering:
        ordering = tuple(x.strip() for x in args.ordering.split(",") if x.strip())
    elif args.mechanism in NEEDS_ORDERING:
        ordering = problem.students
        _note(f"no --ordering given; using input order {','.join(ordering)}")
    return MechanismConfig(args.mechanism, ordering, args.move_policy, args.fam_policy)


def _add_mechanism_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mechanism", choices=KINDS, required=True)
    p.add_argument("--ordering", help="comma-separated student ordering (eam, fam, sd)")
    p.add_argument("--move-policy", default=SHORTEST, choices=MOVE_POLICIES)
    p.add_argument("--fam-policy", default=EARLIEST, choices=(EARLIEST,))


def cmd_run(args) -> int:
    problem = read_problem(args.problem)
    config = mechanism_from_args(args, problem)
    matching = config(problem)
    report = audit(problem, matching, args.cap)
    if args.output:
        Path(args.output).write_text(dump_matching(matching, problem))
    manifest = RunManifest(args.problem, config.describe(), args.output, None, args.cap)
    data = {
        "manifest": asdict(manifest),
        "assignment": {i: matching[i] for i in problem.students},
        "size": matching.size,
        "axioms": report.to_dict(),
    }
    text = f"{config.describe()} on {args.problem}: size {matching.size}\n{matching}\n" + report.text()
    _emit(data, args.format, text)
    _note(f"{config.describe()}: matched {matching.size} of {len(problem.students)} students")
    return 0 if report["individually_rational"].holds else 1


def cmd_audit(args) -> int:
    problem = read_problem(args.problem)
    matching = load_matching(args.matching)
    report = audit(problem, matching, args.cap)
    data = {"manifest": asdict(RunManifest(args.problem, None, None, None, args.cap)), "size": matching.size, "axioms": report.to_dict()}
    _emit(data, args.format, report.text())
    failed = [v.axiom for v in report.verdicts if not v.holds]
    _note("all axioms hold" if not failed else "failing: " + ", ".join(failed))
    return 0 if not failed else 1


def cmd_equilibria(args) -> int:
    problem = read_problem(args.problem)
    config = mechanism_from_args(args, problem)
    try:
        game = ReportGame(config, problem, cap=args.cap)
    except CapExceeded as exc:
        _note(f"refusing: {exc}")
        _emit({"refused": True, "required": exc.needed, "cap": exc.cap}, args.format,
              f"refused: profile space {exc.needed} exceeds cap {exc.cap}\n")
        return 2
    records = game.equilibria(workers=args.workers)
    sizes = [r.outcome.size for r in records]
    outcomes = sorted({str(r.outcome) for r in records})
    summary = {
        "manifest": asdict(RunManifest(args.problem, config.describe(), None, None, args.cap)),
        "profiles": game.space,
        "equilibria": len(records),
        "min_size": min(sizes) if sizes else None,
        "max_size": max(sizes) if sizes else None,
        "distinct_outcomes": outcomes,
    }
    if args.format == "json":
        summary["records"] = [r.to_dict() for r in records]
        _emit(summary, "json", "")
    else:
        lines = [json.dumps(r.to_dict(), sort_keys=True) for r in records]
        head = (f"# {config.describe()} profiles={game.space} equilibria={len(records)} "
                f"sizes=[{summary['min_size']},{summary['max_size']}]\n")
        sys.stdout.write(head + "".join(line + "\n" for line in lines))
    _note(f"{len(records)} equilibria over {game.space} profiles; distinct outcomes: {len(outcomes)}")
    return 0


def _capacity_range(text: str) -> tuple[int, int]:
    parts = [int(x) for x in text.split(",")]
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("capacity range is LO,HI")
    return parts[0], parts[1]


def cmd_gen(args) -> int:
    problem = random_problem(args.students, args.schools, args.capacity, args.acceptability, seed=args.seed)
    text = dump_problem(problem)
    manifest = asdict(RunManifest("gen", None, args.output, args.seed, None))
    manifest["params"] = {
        "students": args.students,
        "schools": args.schools,
        "capacity": list(args.capacity),
        "acceptability": args.acceptability,
    }
    if args.output:
        Path(args.output).write_text(text)
        sys.stdout.write(json.dumps({"manifest": manifest}, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
        _note(json.dumps({"manifest": manifest}, sort_keys=True))
    _note(f"generated {args.students} students, {args.schools} schools (seed {args.seed})")
    return 0


def cmd_repro(args) -> int:
    from .claims import CLAIMS

    names = list(CLAIMS) if "all" in args.claims else args.claims
    results = [CLAIMS[name]() for name in names]
    if args.format == "json":
        _emit({"claims": [{"claim": r.name, "passed": r.passed, "lines": r.lines} for r in results]}, "json", "")
    else:
        sys.stdout.write("".join(r.text() for r in results))
    for r in results:
        _note(f"{r.name}: {'pass' if r.passed else 'FAIL'}")
    return 0 if all(r.passed for r in results) else 1


def cmd_fixture(args) -> int:
    text = dump_problem(FIXTURES[args.name]())
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .claims import CLAIMS

    parser = argparse.ArgumentParser(prog="assignmax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a mechanism on a problem")
    p.add_argument("problem", help="problem JSON file or fixture name")
    _add_mechanism_flags(p)
    p.add_argument("--output", "-o", help="write the matching file here")
    p.add_argument("--cap", type=int, default=DEFAULT_STATE_CAP, help="state cap for exhaustive efficiency checks")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="check a matching against every axiom")
    p.add_argument("problem")
    p.add_argument("matching")
    p.add_argument("--cap", type=int, default=DEFAULT_STATE_CAP)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("equilibria", help="enumerate Nash equilibria of the reporting game")
    p.add_argument("problem")
    _add_mechanism_flags(p)
    p.add_argument("--cap", type=int, default=DEFAULT_PROFILE_CAP, help="maximum number of report profiles")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("gen", help="generate a random problem")
    p.add_argument("--students", "-n", type=int, required=True)
    p.add_argument("--schools", "-m", type=int, required=True)
    p.add_argument("--capacity", type=_capacity_range, default=(1, 1), help="LO,HI (inclusive)")
    p.add_argument("--acceptability", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("repro", help="reproduce a claim on its fixture or seeded corpus")
    p.add_argument("claims", nargs="+", choices=list(CLAIMS) + ["all"])
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("fixture", help="print one of the built-in fixtures as a problem file")
    p.add_argument("name", choices=sorted(FIXTURES))
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProblemError, ValueError, OSError) as exc:
        _note(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
