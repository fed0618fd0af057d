"""Ground-truth projection by direct least squares on stacked constraints.

Every set that can export a row-constraint form {x : C x = d} can be
stacked into one big consistent system whose solution set is exactly
the intersection; the projection of any point onto it is then a single
dense min-norm solve.  This is cubic in the total row count and exists
to validate the iterative solvers, so it is capped at a few thousand
rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import TOL_FEAS, as_point, lstsq_min_norm, norm
from .sets import AffineSet, InfeasibleSetError

MAX_ROWS = 5000


class UnsupportedSetError(TypeError):
    """A set lacks the row-constraint export the oracle needs."""


@dataclass
class StackedConstraints:
    """All row constraints of a set family, concatenated."""

    C: np.ndarray
    d: np.ndarray


def stack(sets: Sequence[AffineSet]) -> StackedConstraints:
    """Concatenate the row-constraint exports of all sets.

    The stacked solution set is exactly the intersection of the family.
    Raises UnsupportedSetError for sets without an export and ValueError
    beyond the row cap.
    """
    blocks = []
    rhs = []
    dim = None
    for k, s in enumerate(sets):
        exported = s.rows()
        if exported is None:
            raise UnsupportedSetError(f"set {k} has no row-constraint export")
        C, d = exported
        C = np.atleast_2d(np.asarray(C, dtype=float))
        d = np.asarray(d, dtype=float).reshape(-1)
        if dim is None:
            dim = C.shape[1]
        elif C.shape[1] != dim:
            raise ValueError("sets live in different dimensions")
        blocks.append(C)
        rhs.append(d)
    C = np.vstack(blocks)
    d = np.concatenate(rhs)
    if C.shape[0] > MAX_ROWS:
        raise ValueError(f"stacked system has {C.shape[0]} rows, above the cap of {MAX_ROWS}")
    return StackedConstraints(C=C, d=d)


def direct_projection(x0, sc: StackedConstraints) -> np.ndarray:
    """Projection of x0 onto the stacked solution set.

    Solves (C C^T) lam = C x0 - d by min-norm least squares and returns
    x0 - C^T lam; the correction lies in the row space of C, which is
    the orthogonal complement of the solution set's direction space.
    """
    x0 = as_point(x0)
    C, d = sc.C, sc.d
    if C.shape[1] != x0.shape[0]:
        raise ValueError(f"dimension mismatch: {C.shape[1]} columns vs point of dim {x0.shape[0]}")
    r = C @ x0 - d
    lam = lstsq_min_norm(C @ C.T, r)
    p = x0 - C.T @ lam
    if norm(C @ p - d) > TOL_FEAS * max(1.0, norm(d)):
        raise InfeasibleSetError("stacked constraint system is inconsistent")
    return p
