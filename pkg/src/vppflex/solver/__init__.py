"""Exact LP/MILP solver for the generated dispatch programs."""

from .milp import (
    DEFAULT_NODE_LIMIT,
    INT_TOL,
    SolverResourceError,
    default_node_limit,
    enumerate_binaries,
    solve_lp,
    solve_milp,
)
from .program import (
    EQ,
    FEAS_TOL,
    GE,
    LE,
    Constraint,
    MixedIntegerProgram,
    ProgramBuilder,
    Solution,
    Status,
    StructuralError,
    Variable,
    max_residual,
    residuals,
    to_lp_format,
)
from .simplex import IterationLimit, TableauSimplex

__all__ = [
    "DEFAULT_NODE_LIMIT", "INT_TOL", "SolverResourceError", "default_node_limit",
    "enumerate_binaries", "solve_lp", "solve_milp", "EQ", "FEAS_TOL", "GE", "LE",
    "Constraint", "MixedIntegerProgram", "ProgramBuilder", "Solution", "Status",
    "StructuralError", "Variable", "max_residual", "residuals", "to_lp_format",
    "IterationLimit", "TableauSimplex",
]
