"""Generic bounded-variable MILP representation and solvers."""

from .problem import (
    EQ,
    GE,
    INFEASIBLE,
    ITER_LIMIT,
    LE,
    NODE_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LpSolution,
    MilpProblem,
    MilpSolution,
    SolveOptions,
)
from .simplex import canonicalize, residuals, solve_canonical
from .solve import brute_force_milp, solve_lp, solve_milp

__all__ = [
    "EQ",
    "GE",
    "LE",
    "INFEASIBLE",
    "ITER_LIMIT",
    "NODE_LIMIT",
    "OPTIMAL",
    "UNBOUNDED",
    "LpSolution",
    "MilpProblem",
    "MilpSolution",
    "SolveOptions",
    "brute_force_milp",
    "canonicalize",
    "residuals",
    "solve_canonical",
    "solve_lp",
    "solve_milp",
]
