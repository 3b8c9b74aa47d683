"""Map sparse sensor measurements back to full-field estimates.

Both solvers produce an (r, p) matrix A with coefficients a_hat = A @ y and
state x_hat = modes @ a_hat. Plain least squares uses the pseudoinverse of
the sensed mode rows; regularized least squares blends the measurements
with a Gaussian coefficient prior and stays well posed for any sensor
count, including p < r and p = 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import BasisModes, GaussianPrior, as_snapshots, check_prior_matches
from .errors import InvalidInput, InvalidMeasurement, RankDeficiencyWarning
from .numerics import DEFAULT_RCOND, numerical_rank, pseudoinverse, spd_solve
from .optimizers import selection_indices

LS = "ls"
RLS = "rls"


@dataclass(frozen=True)
class ReconstructionMatrix:
    """Linear map from p measurements to r basis coefficients."""

    a_matrix: np.ndarray   # (r, p)
    method: str            # "ls" | "rls"
    prior: GaussianPrior | None = None

    @property
    def n_sensors(self) -> int:
        return self.a_matrix.shape[1]


@dataclass(frozen=True)
class Reconstruction:
    """Estimated basis coefficients and the full state they project to."""

    coefficients: np.ndarray   # (r,)
    state: np.ndarray          # (n,)


def build_ls(basis: BasisModes, gamma) -> ReconstructionMatrix:
    """Least-squares reconstruction via the pseudoinverse of the sensed rows."""
    idx = selection_indices(gamma)
    if idx.size == 0:
        raise InvalidInput("least squares needs at least one sensor")
    phi = basis.modes[idx]
    if numerical_rank(phi) < basis.n_modes:
        warnings.warn(
            "sensed mode rows are rank deficient; pseudoinverse resolves only "
            "the spanned coefficient subspace",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return ReconstructionMatrix(pseudoinverse(phi, rcond=DEFAULT_RCOND), LS)


def build_rls(basis: BasisModes, gamma, prior: GaussianPrior) -> ReconstructionMatrix:
    """Regularized least squares: (S^-2 + Phi^T Phi / eta^2)^-1 Phi^T / eta^2.

    Defined for any sensor count; with no sensors the estimate falls back
    to the prior mean (zero coefficients).
    """
    check_prior_matches(basis, prior)
    idx = selection_indices(gamma)
    phi = basis.modes[idx] if idx.size else np.empty((0, basis.n_modes))
    eta2 = prior.noise**2
    lhs = np.diag(prior.std**-2.0) + phi.T @ phi / eta2
    rhs = phi.T / eta2
    return ReconstructionMatrix(spd_solve(lhs, rhs), RLS, prior=prior)


def predict(rm: ReconstructionMatrix, basis: BasisModes, y) -> Reconstruction:
    """Estimate coefficients and full state from one measurement vector."""
    vec = np.atleast_1d(np.asarray(y, dtype=float))
    if vec.ndim != 1 or vec.size != rm.n_sensors:
        raise InvalidMeasurement(
            f"expected {rm.n_sensors} measurements, got shape {vec.shape}"
        )
    if not np.all(np.isfinite(vec)):
        raise InvalidMeasurement("measurements contain non-finite values")
    coeff = rm.a_matrix @ vec
    return Reconstruction(coefficients=coeff, state=basis.modes @ coeff)


def reconstruct_states(rm: ReconstructionMatrix, basis: BasisModes, measurements) -> np.ndarray:
    """Batch form of ``predict``: (m, p) measurements to (m, n) states."""
    y = np.asarray(measurements, dtype=float)
    if y.ndim != 2 or y.shape[1] != rm.n_sensors:
        raise InvalidMeasurement(
            f"expected (snapshots, {rm.n_sensors}) measurements, got {y.shape}"
        )
    if not np.all(np.isfinite(y)):
        raise InvalidMeasurement("measurements contain non-finite values")
    return (y @ rm.a_matrix.T) @ basis.modes.T


def score_rmse(basis: BasisModes, rm: ReconstructionMatrix, gamma, test) -> float:
    """RMSE of reconstructing test snapshots from their own sensor readings.

    Averages squared error over every snapshot and state entry jointly.
    """
    data = as_snapshots(test, "test")
    if data.shape[1] != basis.n_states:
        raise InvalidInput(
            f"test snapshots have {data.shape[1]} states, basis expects {basis.n_states}"
        )
    idx = selection_indices(gamma)
    estimates = reconstruct_states(rm, basis, data[:, idx])
    return float(np.sqrt(np.mean((estimates - data) ** 2)))
