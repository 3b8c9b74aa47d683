"""Basis fitting for snapshot data, plus data-derived Gaussian priors.

Snapshots are stored one per row: an (N, n) matrix holds N observations of
an n-dimensional field. A fitted basis is an (n, r) mode matrix mapping
coefficients ``a`` to full states ``x = modes @ a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePrior, InvalidInput, InvalidRank, RankDeficientBasis
from .numerics import as_matrix, svd_truncated

IDENTITY = "identity"
SVD = "svd"
RANDOM_PROJECTION = "random_projection"
CUSTOM = "custom"

BASIS_KINDS = (IDENTITY, SVD, RANDOM_PROJECTION, CUSTOM)

_RANK_RCOND = 1e-10


def as_snapshots(x, name: str = "snapshots") -> np.ndarray:
    """Coerce to an (N, n) float array of snapshots-in-rows."""
    return as_matrix(x, name)


@dataclass(frozen=True)
class BasisModes:
    """An (n, r) mode matrix and how it was obtained.

    ``singular_values`` is populated only for the SVD basis.
    """

    modes: np.ndarray
    kind: str
    singular_values: np.ndarray | None = None

    @property
    def n_states(self) -> int:
        return self.modes.shape[0]

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]


@dataclass(frozen=True)
class GaussianPrior:
    """Diagonal Gaussian prior on basis coefficients plus sensor noise level.

    ``std`` holds one standard deviation per mode (field units through the
    basis); ``noise`` is the assumed standard deviation of the additive
    measurement noise.
    """

    std: np.ndarray
    noise: float

    def __post_init__(self):
        std = np.atleast_1d(np.asarray(self.std, dtype=float))
        if std.ndim != 1 or std.size == 0:
            raise DegeneratePrior("prior std must be a nonempty vector")
        if not np.all(np.isfinite(std)) or np.any(std <= 0.0):
            raise DegeneratePrior("prior std entries must be finite and > 0")
        if not np.isfinite(self.noise) or self.noise <= 0.0:
            raise DegeneratePrior("noise magnitude must be finite and > 0")
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "noise", float(self.noise))

    @property
    def n_modes(self) -> int:
        return self.std.size


def flat_prior(r: int, scale: float, noise: float) -> GaussianPrior:
    """Isotropic prior: the same standard deviation for every mode."""
    return GaussianPrior(np.full(r, float(scale)), noise)


def fit_identity(x) -> BasisModes:
    """Use raw states directly: the basis is the n-by-n identity."""
    data = as_snapshots(x)
    return BasisModes(np.eye(data.shape[1]), IDENTITY)


def fit_svd(x, r: int, *, center: bool = False) -> BasisModes:
    """Top-r right singular vectors of the snapshot matrix.

    With ``center=True`` the column mean is removed before the
    decomposition; snapshots are not centered by default.
    """
    data = as_snapshots(x)
    n_snapshots, n_states = data.shape
    if not 1 <= r <= min(n_snapshots, n_states):
        raise InvalidRank(f"r={r} not in [1, {min(n_snapshots, n_states)}]")
    if center:
        data = data - data.mean(axis=0)
    result = svd_truncated(data, r)
    return BasisModes(result.right_modes, SVD, singular_values=result.singular_values)


def fit_random_projection(n: int, r: int, seed: int | None = None) -> BasisModes:
    """Gaussian random projection basis, scaled by 1/sqrt(r)."""
    if not 1 <= r <= n:
        raise InvalidRank(f"r={r} not in [1, {n}]")
    rng = np.random.default_rng(seed)
    modes = rng.standard_normal((n, r)) / np.sqrt(r)
    return BasisModes(modes, RANDOM_PROJECTION)


def fit_custom(modes) -> BasisModes:
    """Wrap user-supplied modes verbatim; no orthonormalization is applied."""
    m = as_matrix(modes, "modes")
    n, r = m.shape
    if r > n:
        raise RankDeficientBasis(f"more modes ({r}) than states ({n})")
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] <= _RANK_RCOND * s[0]:
        raise RankDeficientBasis("mode matrix is rank deficient")
    return BasisModes(m.copy(), CUSTOM)


def decreasing_prior(x, r: int, noise: float) -> GaussianPrior:
    """Prior std per mode from the training data's normalized singular values.

    Mode k gets sigma_k / sqrt(N), so strongly expressed modes are allowed
    larger coefficients.
    """
    data = as_snapshots(x)
    n_snapshots, n_states = data.shape
    if not 1 <= r <= min(n_snapshots, n_states):
        raise InvalidRank(f"r={r} not in [1, {min(n_snapshots, n_states)}]")
    s = np.linalg.svd(data, compute_uv=False)[:r]
    if np.any(s <= 0.0):
        raise DegeneratePrior(f"zero singular value within the top {r}")
    return GaussianPrior(s / np.sqrt(n_snapshots), noise)


def check_prior_matches(basis: BasisModes, prior: GaussianPrior) -> None:
    if prior.n_modes != basis.n_modes:
        raise InvalidInput(
            f"prior has {prior.n_modes} entries but basis has {basis.n_modes} modes"
        )
