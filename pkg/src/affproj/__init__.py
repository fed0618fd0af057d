"""Projection of a point onto the intersection of closed affine subspaces.

Three solvers (plain alternating projections and two supporting-
hyperplane accelerations), convergence-certificate monitors, a direct
least-squares oracle, and the quadratic-pencil model-updating problem
family built on top of them.
"""

from .diagnostics import (ConditionReport, IterationRecord, check_b_prime,
                          check_condition_b, check_fejer, condition_report)
from .linalg import gram_solve, inner, lstsq_min_norm, norm
from .oracle import StackedConstraints, UnsupportedSetError, direct_projection, stack
from .sets import (AffineSet, CustomSet, Hyperplane, HyperplaneSet,
                   InfeasibleIntersectionError, InfeasibleSetError,
                   RowConstraintSet, project_hyperplane,
                   project_hyperplane_intersection, project_row_constraint,
                   residual)
from .solver import (All, ConditionB, CyclicSchedule, HyperplaneBuffer, LastQ,
                     SolveResult, StoppingRule, WindowPolicy, lift_start,
                     run_alg1, run_alg2, run_map)

__version__ = "0.1.0"

__all__ = [
    "AffineSet", "All", "ConditionB", "ConditionReport", "CustomSet",
    "CyclicSchedule", "Hyperplane", "HyperplaneBuffer", "HyperplaneSet",
    "InfeasibleIntersectionError", "InfeasibleSetError", "IterationRecord",
    "LastQ", "RowConstraintSet", "SolveResult", "StackedConstraints",
    "StoppingRule", "UnsupportedSetError", "WindowPolicy",
    "check_b_prime", "check_condition_b", "check_fejer", "condition_report",
    "direct_projection", "gram_solve", "inner", "lift_start",
    "lstsq_min_norm", "norm", "project_hyperplane",
    "project_hyperplane_intersection", "project_row_constraint", "residual",
    "run_alg1", "run_alg2", "run_map", "stack",
]
