"""Assignment-maximizing school choice mechanisms and the tools to audit them."""

from .assignment_core import (
    ImprovingMove,
    apply_move,
    feasible,
    find_improving_move,
    greedy_forced_set,
    max_assignable_size,
    select_step1_matching,
)
from .core_model import (
    Matching,
    Problem,
    fixture_a,
    fixture_b,
    fixture_c,
    is_individually_rational,
    prefers,
    validate_problem,
)
from .mechanisms import (
    MechanismConfig,
    run_boston,
    run_da,
    run_eam,
    run_fam,
    run_sd,
    run_ttc,
)

__version__ = "0.1.0"

__all__ = [
    "ImprovingMove",
    "Matching",
    "MechanismConfig",
    "Problem",
    "apply_move",
    "feasible",
    "find_improving_move",
    "fixture_a",
    "fixture_b",
    "fixture_c",
    "greedy_forced_set",
    "is_individually_rational",
    "max_assignable_size",
    "prefers",
    "run_boston",
    "run_da",
    "run_eam",
    "run_fam",
    "run_sd",
    "run_ttc",
    "select_step1_matching",
    "validate_problem",
]
