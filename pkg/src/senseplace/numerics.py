"""Dense linear-algebra kernels.

Truncated SVD, greedy column-pivoted QR with pluggable pivot criteria,
symmetric positive-definite solves, and an SVD-based pseudoinverse. These
are the primitives everything else in the package is built on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    InfeasibleConstraint,
    InvalidCount,
    InvalidInput,
    InvalidRank,
    NotPositiveDefinite,
)

# A norm modifier reshapes the pivot criterion at each step:
# (step, residual_norms, selected_so_far) -> modified_norms.
NormModifier = Callable[[int, np.ndarray, list], np.ndarray]

# Recompute a residual column norm from the deflated matrix once its
# downdated value falls below this fraction of the last exact value.
_NORM_DRIFT_RATIO = 1e-6

_SYMMETRY_TOL = 1e-10

DEFAULT_RCOND = 1e-12


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInput(f"{name} must be 2-D with at least one row and column")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class SvdResult:
    """Top-r singular triplets of a matrix."""

    left_modes: np.ndarray        # (rows, r)
    singular_values: np.ndarray   # (r,), nonincreasing
    right_modes: np.ndarray       # (cols, r)


@dataclass(frozen=True)
class PivotTrace:
    """Pivot order and the residual column norm recorded at each selection."""

    pivots: np.ndarray       # unique column indices, in selection order
    step_norms: np.ndarray   # unmodified residual norm of each pivot


def svd_truncated(m, r: int) -> SvdResult:
    """Top-r singular triplets of ``m`` via a full-precision SVD."""
    a = as_matrix(m)
    if not 1 <= r <= min(a.shape):
        raise InvalidRank(f"r={r} not in [1, {min(a.shape)}]")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return SvdResult(
        left_modes=np.ascontiguousarray(u[:, :r]),
        singular_values=s[:r].copy(),
        right_modes=np.ascontiguousarray(vh[:r].T),
    )


def qr_pivot_greedy(m, p: int, norm_modifier: NormModifier | None = None) -> PivotTrace:
    """Greedy column-pivoted QR selection of ``p`` columns.

    At each step the column with the largest residual norm among the
    unselected ones is chosen (ties broken by lowest index) and all
    remaining columns are deflated by their projection onto the chosen
    column's residual direction. ``norm_modifier`` may reshape the
    selection criterion (cost penalties, constraint masking); the
    recorded ``step_norms`` are always the unmodified residual norms.

    Residual norms are maintained by downdating, with a from-scratch
    recomputation whenever a norm drops below ``1e-6`` of its value at
    the last exact evaluation.

    Raises ``InfeasibleConstraint`` when every unselected column has a
    modified norm of exactly zero before ``p`` pivots are placed; the
    partial trace is attached to the exception.
    """
    work = as_matrix(m).copy()
    rows, cols = work.shape
    if not 1 <= p <= cols:
        raise InvalidCount(f"p={p} not in [1, {cols}]")

    norms2 = np.einsum("ij,ij->j", work, work)
    ref2 = norms2.copy()
    selected = np.zeros(cols, dtype=bool)
    pivots: list[int] = []
    step_norms: list[float] = []

    for step in range(p):
        norms = np.sqrt(np.maximum(norms2, 0.0))
        if norm_modifier is not None:
            modified = np.asarray(norm_modifier(step, norms.copy(), list(pivots)), dtype=float)
            if modified.shape != (cols,):
                raise InvalidInput("norm modifier returned wrong shape")
        else:
            modified = norms

        if np.all(modified[~selected] == 0.0):
            raise InfeasibleConstraint(
                f"no admissible column left at step {step} ({len(pivots)} of {p} placed)",
                trace=PivotTrace(np.array(pivots, dtype=int), np.array(step_norms)),
            )
        candidates = np.where(selected, -np.inf, modified)
        j = int(np.argmax(candidates))

        column = work[:, j]
        norm_j = float(np.linalg.norm(column))
        pivots.append(j)
        step_norms.append(norm_j)
        selected[j] = True
        norms2[j] = 0.0
        ref2[j] = 0.0

        if norm_j > 0.0 and step + 1 < p:
            direction = column / norm_j
            coeffs = direction @ work
            work -= np.outer(direction, coeffs)
            np.maximum(norms2 - coeffs * coeffs, 0.0, out=norms2)
            drift = ~selected & (norms2 < _NORM_DRIFT_RATIO**2 * ref2)
            if np.any(drift):
                exact = np.einsum("ij,ij->j", work[:, drift], work[:, drift])
                norms2[drift] = exact
                ref2[drift] = exact

    return PivotTrace(np.array(pivots, dtype=int), np.array(step_norms))


def spd_solve(m, rhs) -> np.ndarray:
    """Solve ``m @ z = rhs`` for symmetric positive-definite ``m``."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NotPositiveDefinite("matrix is not square")
    scale = max(1.0, float(np.max(np.abs(a))))
    if float(np.max(np.abs(a - a.T))) > _SYMMETRY_TOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise InvalidInput("right-hand side has incompatible shape")
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    if b.ndim == 2 and b.shape[1] == 0:
        return np.zeros_like(b)
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def pseudoinverse(m, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse, zeroing singular values <= rcond * sigma_max."""
    a = as_matrix(m)
    if rcond < 0:
        raise InvalidInput("rcond must be nonnegative")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    cutoff = rcond * (s[0] if s.size else 0.0)
    inv = np.where(s > cutoff, np.divide(1.0, s, out=np.zeros_like(s), where=s > 0), 0.0)
    return (vh.T * inv) @ u.T


def numerical_rank(m, rcond: float = DEFAULT_RCOND) -> int:
    """Number of singular values above rcond * sigma_max."""
    s = np.linalg.svd(as_matrix(m), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rcond * s[0]))
