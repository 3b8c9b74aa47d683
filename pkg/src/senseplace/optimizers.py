"""Sensor selection: plain QR pivoting, cost-weighted and constraint-aware
variants, and the two-point greedy information optimizer.

All selectors rank the rows of the (n, r) mode matrix as candidate sensor
locations and return an ordered index list. QR-family selectors run greedy
column pivoting on the transposed mode matrix; the two-point optimizer
greedily minimizes a prior-regularized log-determinant objective split into
one-point energies and pairwise interaction terms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import BasisModes, GaussianPrior, check_prior_matches
from .constraints import DISTANCE, EXACT_N, MAX_N, PREDETERMINED, ConstraintSpec
from .errors import (
    InfeasibleConstraint,
    InvalidCount,
    InvalidInput,
    RankDeficiencyWarning,
)
from .numerics import PivotTrace, qr_pivot_greedy


@dataclass(frozen=True)
class SensorSelection:
    """Ordered sensor indices plus ranking metadata.

    Only the first ``n_ranked`` entries carry information ranking; pivots
    past the basis rank are deflation leftovers. ``requested`` records the
    sensor count asked for — the selection is shorter only when pivoting
    ran out of independent columns (flagged by ``complete``).
    """

    indices: np.ndarray
    n_ranked: int
    requested: int
    step_scores: np.ndarray | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.ndim != 1 or np.unique(idx).size != idx.size:
            raise InvalidInput("sensor indices must be a 1-D unique list")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.size

    @property
    def complete(self) -> bool:
        return self.indices.size == self.requested


def selection_indices(gamma) -> np.ndarray:
    """Accept a SensorSelection or a plain index sequence."""
    if isinstance(gamma, SensorSelection):
        return gamma.indices
    idx = np.asarray(gamma, dtype=int)
    if idx.ndim != 1:
        raise InvalidInput("sensor indices must be 1-D")
    return idx


def _check_count(p: int, n: int):
    if not 1 <= p <= n:
        raise InvalidCount(f"p={p} not in [1, {n}]")


def _trace_to_selection(trace: PivotTrace, p: int, r: int) -> SensorSelection:
    return SensorSelection(
        indices=trace.pivots,
        n_ranked=min(len(trace.pivots), r),
        requested=p,
        step_scores=trace.step_norms,
    )


def _pivot_or_truncate(matrix, p: int, r: int, norm_modifier=None) -> SensorSelection:
    """Run greedy pivoting, downgrading exact rank exhaustion to a warning."""
    try:
        trace = qr_pivot_greedy(matrix, p, norm_modifier)
    except InfeasibleConstraint as exc:
        if exc.trace is None or len(exc.trace.pivots) == 0:
            raise
        warnings.warn(
            f"rank deficiency: only {len(exc.trace.pivots)} of {p} sensors placed",
            RankDeficiencyWarning,
            stacklevel=3,
        )
        trace = exc.trace
    return _trace_to_selection(trace, p, r)


def qr_select(basis: BasisModes, p: int) -> SensorSelection:
    """Rank sensor locations by greedy QR pivoting on the mode matrix.

    For p beyond the basis rank the pivoting continues on the deflated
    residual; those trailing picks carry no ranking information and are
    excluded from ``n_ranked``.
    """
    n, r = basis.modes.shape
    _check_count(p, n)
    return _pivot_or_truncate(basis.modes.T, p, r)


def ccqr_select(basis: BasisModes, p: int, costs) -> SensorSelection:
    """QR pivoting with the per-location cost subtracted from each pivot score.

    Costs are applied to unnormalized residual norms; scale them to the
    data's units. Zero costs reproduce ``qr_select`` exactly.
    """
    n, r = basis.modes.shape
    _check_count(p, n)
    cost = np.asarray(costs, dtype=float)
    if cost.shape != (n,):
        raise InvalidInput(f"costs must have length {n}")
    if not np.all(np.isfinite(cost)) or np.any(cost < 0):
        raise InvalidInput("costs must be finite and nonnegative")

    def modifier(step, norms, selected):
        return norms - cost

    return _pivot_or_truncate(basis.modes.T, p, r, modifier)


def _constrained_mask(spec: ConstraintSpec, n: int) -> np.ndarray:
    idx = spec.idx_constrained
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise InvalidInput("constrained indices out of range")
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    return mask


def _max_n_modifier(mask: np.ndarray, s: int):
    def modifier(step, norms, selected):
        placed = int(np.count_nonzero(mask[selected])) if selected else 0
        if placed >= s:
            norms[mask] = 0.0
        return norms

    return modifier


def _exact_n_modifier(mask: np.ndarray, s: int, p: int):
    def modifier(step, norms, selected):
        placed = int(np.count_nonzero(mask[selected])) if selected else 0
        if placed >= s:
            norms[mask] = 0.0
        elif p - len(selected) == s - placed:
            norms[~mask] = 0.0
        return norms

    return modifier


def _predetermined_modifier(forced: np.ndarray):
    def modifier(step, norms, selected):
        if step < forced.size:
            out = np.zeros_like(norms)
            out[forced[step]] = 1.0
            return out
        return norms

    return modifier


def _distance_modifier(coords: np.ndarray, d: float):
    blocked = np.zeros(coords.shape[0], dtype=bool)
    seen = 0

    def modifier(step, norms, selected):
        nonlocal seen
        while seen < len(selected):
            delta = coords - coords[selected[seen]]
            blocked[np.einsum("ij,ij->i", delta, delta) < d * d] = True
            seen += 1
        norms[blocked] = 0.0
        return norms

    return modifier


def gqr_select(
    basis: BasisModes,
    p: int,
    spec: ConstraintSpec,
    predetermined=None,
) -> SensorSelection:
    """QR pivoting under a hard spatial constraint.

    The constraint is enforced by zeroing pivot scores: ``max_n`` caps the
    in-region sensor count at ``s``, ``exact_n`` additionally forces
    in-region picks once the remaining budget requires them,
    ``predetermined`` places the given sensors first (deflating after
    each) and optimizes the rest, and ``distance`` blocks every location
    closer than ``d`` to an already placed sensor.

    Selection beyond the basis rank is refused: deflation leftovers are
    effectively random picks, which would silently violate the constraint.
    """
    n, r = basis.modes.shape
    _check_count(p, n)
    if p > r:
        raise InvalidCount(
            f"constrained selection needs p <= basis rank ({r}); got p={p}"
        )
    mask = _constrained_mask(spec, n)

    if spec.mode == MAX_N:
        modifier = _max_n_modifier(mask, spec.s)
    elif spec.mode == EXACT_N:
        s = spec.s
        if s > p:
            raise InfeasibleConstraint(f"exact_n needs s <= p; got s={s}, p={p}")
        if int(mask.sum()) < s:
            raise InfeasibleConstraint(
                f"exact_n needs {s} in-region sensors but the region has only "
                f"{int(mask.sum())} locations"
            )
        if n - int(mask.sum()) < p - s:
            raise InfeasibleConstraint(
                f"exact_n needs {p - s} out-of-region sensors but only "
                f"{n - int(mask.sum())} locations are outside"
            )
        modifier = _exact_n_modifier(mask, s, p)
    elif spec.mode == PREDETERMINED:
        if predetermined is None:
            raise InvalidInput("predetermined mode needs the predetermined index list")
        forced = np.asarray(predetermined, dtype=int)
        if forced.ndim != 1 or np.unique(forced).size != forced.size:
            raise InvalidInput("predetermined indices must be 1-D and unique")
        if forced.size and (forced.min() < 0 or forced.max() >= n):
            raise InvalidInput("predetermined indices out of range")
        if spec.s is not None and spec.s != forced.size:
            raise InvalidInput(
                f"predetermined list has {forced.size} entries but s={spec.s}"
            )
        if forced.size > p:
            raise InfeasibleConstraint(
                f"{forced.size} predetermined sensors exceed p={p}"
            )
        modifier = _predetermined_modifier(forced)
    else:  # DISTANCE
        if spec.geometry.n_states != n:
            raise InvalidInput("constraint geometry does not cover the state space")
        modifier = _distance_modifier(spec.geometry.coords(), spec.d)

    trace = qr_pivot_greedy(basis.modes.T, p, modifier)
    return _trace_to_selection(trace, p, r)


# --- two-point greedy optimizer -----------------------------------------------

def _scaled_rows(basis: BasisModes, prior: GaussianPrior) -> np.ndarray:
    """Rows of the mode matrix scaled by prior std over noise."""
    check_prior_matches(basis, prior)
    return basis.modes * (prior.std / prior.noise)


def one_point_energies(basis: BasisModes, prior: GaussianPrior) -> np.ndarray:
    """Information gain of a single sensor at each location: -log(1 + |v_i|^2)."""
    v = _scaled_rows(basis, prior)
    return -np.log1p(np.einsum("ij,ij->i", v, v))


@dataclass(frozen=True)
class PairEnergies:
    """One-point energies plus each placed sensor's interaction field.

    ``selected_j[k, i]`` is the pair term between location ``i`` and the
    k-th placed sensor (the self term at ``i == gamma_k`` included).
    """

    h: np.ndarray           # (n,)
    selected_j: np.ndarray  # (len(gamma), n)


def _pair_column(v: np.ndarray, a: np.ndarray, j: int) -> np.ndarray:
    """Interaction J(., j): redundancy penalty against sensor j."""
    overlap = v @ v[j]
    c2 = (overlap * overlap) / ((1.0 + a) * (1.0 + a[j]))
    return -np.log1p(-np.minimum(c2, 1.0))


def pair_energies(basis: BasisModes, prior: GaussianPrior, gamma) -> PairEnergies:
    """Energy components for a placed sensor set."""
    idx = selection_indices(gamma)
    v = _scaled_rows(basis, prior)
    a = np.einsum("ij,ij->i", v, v)
    h = -np.log1p(a)
    rows = np.empty((idx.size, v.shape[0]))
    for k, j in enumerate(idx):
        rows[k] = _pair_column(v, a, int(j))
    return PairEnergies(h=h, selected_j=rows)


def tpgr_select(basis: BasisModes, p: int, prior: GaussianPrior) -> SensorSelection:
    """Greedy minimization of the two-point information objective.

    Each step picks the location minimizing its one-point energy plus the
    accumulated pair interactions with already placed sensors; the running
    sums are updated incrementally, so a step costs O(n r). Works for any
    sensor count relative to the mode count.
    """
    n, _ = basis.modes.shape
    _check_count(p, n)
    v = _scaled_rows(basis, prior)
    a = np.einsum("ij,ij->i", v, v)
    acc = -np.log1p(a)

    available = np.ones(n, dtype=bool)
    chosen: list[int] = []
    scores: list[float] = []
    for step in range(p):
        candidates = np.where(available, acc, np.inf)
        j = int(np.argmin(candidates))
        chosen.append(j)
        scores.append(float(acc[j]))
        available[j] = False
        if step + 1 < p:
            acc += _pair_column(v, a, j)

    return SensorSelection(
        indices=np.array(chosen, dtype=int),
        n_ranked=p,
        requested=p,
        step_scores=np.array(scores),
    )


def exact_objective(basis: BasisModes, gamma, prior: GaussianPrior) -> float:
    """Direct evaluation of the regularized log-determinant objective.

    Computes -log det(S^-2 + Phi^T Phi / eta^2) for the selected rows Phi;
    the brute-force reference the greedy optimizer is tested against. The
    empty selection gives the prior-only baseline 2 * sum(log S_k).
    """
    check_prior_matches(basis, prior)
    idx = selection_indices(gamma)
    phi = basis.modes[idx]
    m = np.diag(prior.std**-2.0) + phi.T @ phi / prior.noise**2
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise InvalidInput("objective matrix lost positive definiteness")
    return float(-logdet)
