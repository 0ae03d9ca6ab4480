from .problem import (
    CONVERGED,
    INVALID,
    MAX_ITER,
    STALLED,
    NLPProblem,
    SolveReport,
    check_derivatives,
)
from .solver import SolverOptions, solve

__all__ = [
    "CONVERGED",
    "INVALID",
    "MAX_ITER",
    "STALLED",
    "NLPProblem",
    "SolveReport",
    "check_derivatives",
    "SolverOptions",
    "solve",
]
