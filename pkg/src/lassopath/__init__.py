"""Complete piecewise-linear lasso solution paths.

Computes the full solution path of l1-regularized least squares for an
arbitrary matrix/data pair with a generalized homotopy method whose
per-kink direction is the minimal-norm solution of a sign-constrained
least squares problem.  Includes the classical single-support homotopy and
a looping variant for comparison, plus an independent fixed-parameter
solver for path verification.
"""

from .directions import (
    DirectionCertificate,
    DirectionProblem,
    DirectionSolverError,
    MembershipReport,
    direction_set_membership,
    min_norm_direction,
    solve_direction,
)
from .fixtures import (
    generate_instance,
    infinite_kinks_instance,
    loris_instance,
    tibshirani_instance,
)
from .homotopy import (
    ALGORITHMS,
    HomotopyConfig,
    LoopCapExceeded,
    OneAtATimeReport,
    StepSizeBreakdown,
    adversarial_demo,
    one_at_a_time_report,
    run_generalized,
    run_looping,
    run_standard,
    solve_path,
    step_size,
)
from .model import (
    PathFormatError,
    PathPoint,
    ProblemInstance,
    SolutionPath,
    Termination,
    Tolerances,
    active_set,
    energy,
    equicorrelation_set,
    eval_path,
    max_correlation,
    path_from_json,
    path_from_json_dict,
    subgradient,
)
from .oracle import (
    OracleConfig,
    OracleError,
    VerificationReport,
    fista_solve,
    kkt_check,
    tibshirani_beta,
    verify_path,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "DirectionCertificate",
    "DirectionProblem",
    "DirectionSolverError",
    "HomotopyConfig",
    "LoopCapExceeded",
    "MembershipReport",
    "OneAtATimeReport",
    "OracleConfig",
    "OracleError",
    "PathFormatError",
    "PathPoint",
    "ProblemInstance",
    "SolutionPath",
    "StepSizeBreakdown",
    "Termination",
    "Tolerances",
    "VerificationReport",
    "active_set",
    "adversarial_demo",
    "direction_set_membership",
    "energy",
    "equicorrelation_set",
    "eval_path",
    "fista_solve",
    "generate_instance",
    "infinite_kinks_instance",
    "kkt_check",
    "loris_instance",
    "max_correlation",
    "min_norm_direction",
    "one_at_a_time_report",
    "path_from_json",
    "path_from_json_dict",
    "run_generalized",
    "run_looping",
    "run_standard",
    "solve_direction",
    "solve_path",
    "step_size",
    "subgradient",
    "tibshirani_beta",
    "verify_path",
]
