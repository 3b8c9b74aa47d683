"""High-level model tying together basis fitting, sensor selection,
reconstruction, scoring, and uncertainty maps, plus error-curve sweeps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import basis as basis_mod
from . import optimizers, reconstruct, uq
from .basis import BasisModes, GaussianPrior, as_snapshots
from .constraints import ConstraintSpec
from .errors import (
    CurvePointError,
    InvalidCount,
    InvalidInput,
    NotFitted,
    RankDeficiencyWarning,
    SenseplaceError,
)
from .optimizers import SensorSelection

QR = "qr"
CCQR = "ccqr"
GQR = "gqr"
TPGR = "tpgr"

OPTIMIZER_KINDS = (QR, CCQR, GQR, TPGR)

FLAT = "flat"
DECREASING = "decreasing"

_DEFAULT_PRIOR_SCALE = 1.0
_DEFAULT_NOISE = 1.0


def fit_basis(
    train,
    *,
    kind: str = basis_mod.SVD,
    n_modes: int | None = None,
    seed: int | None = None,
    center: bool = False,
    custom_modes=None,
) -> BasisModes:
    """Fit a basis of the given kind to training snapshots."""
    data = as_snapshots(train, "train")
    if kind == basis_mod.IDENTITY:
        return basis_mod.fit_identity(data)
    if kind == basis_mod.SVD:
        if n_modes is None:
            raise InvalidInput("svd basis needs n_modes")
        return basis_mod.fit_svd(data, n_modes, center=center)
    if kind == basis_mod.RANDOM_PROJECTION:
        if n_modes is None:
            raise InvalidInput("random projection basis needs n_modes")
        return basis_mod.fit_random_projection(data.shape[1], n_modes, seed=seed)
    if kind == basis_mod.CUSTOM:
        if custom_modes is None:
            raise InvalidInput("custom basis needs the mode matrix")
        return basis_mod.fit_custom(custom_modes)
    raise InvalidInput(f"unknown basis kind {kind!r}")


def resolve_prior(
    prior,
    *,
    n_modes: int,
    noise: float | None = None,
    train=None,
    scale: float = _DEFAULT_PRIOR_SCALE,
) -> GaussianPrior:
    """Build a GaussianPrior from the accepted shorthand forms.

    ``prior`` may be a GaussianPrior, the string ``"flat"`` (isotropic at
    ``scale``), the string ``"decreasing"`` (normalized training singular
    values; needs ``train``), an explicit std vector, or ``None`` — which
    falls back to a flat prior of scale 1.0 with a warning, since a
    data-driven prior is almost always the better choice.
    """
    eta = _DEFAULT_NOISE if noise is None else float(noise)
    if prior is None:
        warnings.warn(
            "no prior supplied; using a flat prior of scale 1.0 "
            "(a decreasing, data-driven prior is recommended)",
            UserWarning,
            stacklevel=3,
        )
        return basis_mod.flat_prior(n_modes, _DEFAULT_PRIOR_SCALE, eta)
    if isinstance(prior, GaussianPrior):
        return prior
    if isinstance(prior, str):
        if prior == FLAT:
            return basis_mod.flat_prior(n_modes, scale, eta)
        if prior == DECREASING:
            if train is None:
                raise InvalidInput("decreasing prior needs training snapshots")
            return basis_mod.decreasing_prior(train, n_modes, eta)
        raise InvalidInput(f"unknown prior kind {prior!r}")
    return GaussianPrior(np.asarray(prior, dtype=float), eta)


class SensorModel:
    """Fit a basis to training snapshots, place sensors, and reconstruct.

    Parameters mirror the run configuration: ``basis`` is one of
    identity/svd/random_projection/custom, ``optimizer`` one of
    qr/ccqr/gqr/tpgr. Optimizer-specific inputs (``costs``, ``constraint``
    plus optional ``predetermined``, or a placement ``prior``) are required
    by their respective optimizers and ignored otherwise.
    """

    def __init__(
        self,
        *,
        n_sensors: int,
        basis: str = basis_mod.SVD,
        n_modes: int | None = None,
        optimizer: str = QR,
        seed: int | None = None,
        center: bool = False,
        custom_modes=None,
        costs=None,
        constraint: ConstraintSpec | None = None,
        predetermined=None,
        prior=None,
        noise: float | None = None,
    ):
        if basis not in basis_mod.BASIS_KINDS:
            raise InvalidInput(f"unknown basis kind {basis!r}")
        if optimizer not in OPTIMIZER_KINDS:
            raise InvalidInput(f"unknown optimizer kind {optimizer!r}")
        self.n_sensors = int(n_sensors)
        self.basis_kind = basis
        self.n_modes = n_modes
        self.optimizer = optimizer
        self.seed = seed
        self.center = center
        self.custom_modes = custom_modes
        self.costs = costs
        self.constraint = constraint
        self.predetermined = predetermined
        self.prior = prior
        self.noise = noise

        self._basis: BasisModes | None = None
        self._ranking: SensorSelection | None = None
        self._selected: SensorSelection | None = None
        self._train: np.ndarray | None = None

    def clone(self, **overrides) -> "SensorModel":
        """Unfitted copy with selected settings replaced."""
        settings = dict(
            n_sensors=self.n_sensors,
            basis=self.basis_kind,
            n_modes=self.n_modes,
            optimizer=self.optimizer,
            seed=self.seed,
            center=self.center,
            custom_modes=self.custom_modes,
            costs=self.costs,
            constraint=self.constraint,
            predetermined=self.predetermined,
            prior=self.prior,
            noise=self.noise,
        )
        settings.update(overrides)
        return SensorModel(**settings)

    # --- fitting ---------------------------------------------------------

    def _fit_basis(self, train: np.ndarray) -> BasisModes:
        return fit_basis(
            train,
            kind=self.basis_kind,
            n_modes=self.n_modes,
            seed=self.seed,
            center=self.center,
            custom_modes=self.custom_modes,
        )

    def _run_optimizer(self, fitted: BasisModes, train: np.ndarray) -> None:
        p = self.n_sensors
        n = fitted.n_states
        if not 1 <= p <= n:
            raise InvalidCount(f"n_sensors={p} not in [1, {n}]")
        if self.optimizer == QR:
            self._ranking = self._full_ranking(fitted, p, optimizers.qr_select)
        elif self.optimizer == CCQR:
            if self.costs is None:
                raise InvalidInput("ccqr optimizer needs costs")
            self._ranking = self._full_ranking(
                fitted, p, lambda b, count: optimizers.ccqr_select(b, count, self.costs)
            )
        elif self.optimizer == GQR:
            if self.constraint is None:
                raise InvalidInput("gqr optimizer needs a constraint spec")
            self._ranking = optimizers.gqr_select(
                fitted, p, self.constraint, self.predetermined
            )
        else:  # TPGR
            placement_prior = resolve_prior(
                self.prior,
                n_modes=fitted.n_modes,
                noise=self.noise,
                train=train,
            )
            self._ranking = optimizers.tpgr_select(fitted, p, placement_prior)

        if self.optimizer in (QR, CCQR):
            ranking = self._ranking
            count = min(p, self._pivot_count)
            if count < p:
                warnings.warn(
                    f"rank deficiency: only {count} of {p} requested sensors are "
                    "independent; selection truncated",
                    RankDeficiencyWarning,
                    stacklevel=3,
                )
            self._selected = SensorSelection(
                indices=ranking.indices[:count],
                n_ranked=min(count, ranking.n_ranked),
                requested=p,
                step_scores=None
                if ranking.step_scores is None
                else ranking.step_scores[:count],
            )
        else:
            self._selected = self._ranking

    def _full_ranking(self, fitted: BasisModes, p: int, select) -> SensorSelection:
        """Rank every candidate location. Once pivoting exhausts the basis
        rank exactly, the remaining locations all tie at zero residual norm,
        so the lowest-index rule appends them in ascending order."""
        n = fitted.n_states
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficiencyWarning)
            ranking = select(fitted, n)
        self._pivot_count = len(ranking)
        if len(ranking) == n:
            return ranking
        remaining = np.setdiff1d(np.arange(n), ranking.indices)
        return SensorSelection(
            indices=np.concatenate([ranking.indices, remaining]),
            n_ranked=ranking.n_ranked,
            requested=n,
            step_scores=np.concatenate(
                [ranking.step_scores, np.zeros(remaining.size)]
            ),
        )

    def fit(self, train) -> "SensorModel":
        """Fit the basis, then run the sensor optimizer. Refitting replaces
        all previous state."""
        data = as_snapshots(train, "train")
        fitted = self._fit_basis(data)
        self._train = data
        self._basis = fitted
        self._run_optimizer(fitted, data)
        return self

    # --- fitted accessors --------------------------------------------------

    def _require_fit(self):
        if self._basis is None:
            raise NotFitted("call fit() first")

    @property
    def basis(self) -> BasisModes:
        self._require_fit()
        return self._basis

    def get_all_sensors(self) -> SensorSelection:
        """Full candidate ranking for the QR family; the placed set for the
        constrained and two-point optimizers, whose ranking past the
        requested count is undefined."""
        self._require_fit()
        return self._ranking

    def get_selected_sensors(self) -> SensorSelection:
        self._require_fit()
        return self._selected

    # --- reconstruction ------------------------------------------------------

    def _resolve_prior(self, prior, noise=None) -> GaussianPrior:
        return resolve_prior(
            prior if prior is not None else self.prior,
            n_modes=self._basis.n_modes,
            noise=noise if noise is not None else self.noise,
            train=self._train,
        )

    def reconstruction_matrix(
        self, method: str = reconstruct.RLS, prior=None, noise=None
    ) -> reconstruct.ReconstructionMatrix:
        self._require_fit()
        if method == reconstruct.LS:
            return reconstruct.build_ls(self._basis, self._selected)
        if method != reconstruct.RLS:
            raise InvalidInput(f"unknown reconstruction method {method!r}")
        return reconstruct.build_rls(
            self._basis, self._selected, self._resolve_prior(prior, noise)
        )

    def predict(self, y, method: str = reconstruct.RLS, prior=None, noise=None):
        """Reconstruct one snapshot from its sensor measurements."""
        rm = self.reconstruction_matrix(method, prior, noise)
        return reconstruct.predict(rm, self._basis, y)

    def score(self, test, method: str = reconstruct.RLS, prior=None, noise=None) -> float:
        """RMSE of reconstructing ``test`` from its own sensor readings."""
        rm = self.reconstruction_matrix(method, prior, noise)
        return reconstruct.score_rmse(self._basis, rm, self._selected, test)

    def std(self, noise: float, method: str = reconstruct.RLS, prior=None) -> np.ndarray:
        """Noise-induced uncertainty per state location."""
        rm = self.reconstruction_matrix(method, prior, noise)
        return uq.uncertainty_heatmap(self._basis, rm, noise)

    def one_pt_energy_landscape(self, prior=None, noise=None) -> np.ndarray:
        self._require_fit()
        return uq.one_pt_energy_landscape(self._basis, self._resolve_prior(prior, noise))

    def two_pt_energy_landscape(self, prior=None, noise=None, ref=None) -> np.ndarray:
        self._require_fit()
        reference = self._selected if ref is None else ref
        return uq.two_pt_energy_landscape(
            self._basis, self._resolve_prior(prior, noise), reference
        )


@dataclass(frozen=True)
class RmseCurve:
    """Reconstruction error against sensor count, for both solvers."""

    p_values: np.ndarray
    rmse_ls: np.ndarray
    rmse_rls: np.ndarray


def rmse_curve(
    model: SensorModel,
    train,
    test,
    p_values,
    prior=None,
    *,
    noise_std: float = 0.0,
    noise_seed: int = 0,
) -> RmseCurve:
    """Sweep the sensor count and score both reconstruction solvers.

    The model is refit per point with everything but ``n_sensors`` fixed.
    When ``noise_std`` is positive, measurement noise is drawn from a
    dedicated generator seeded per point by ``(noise_seed, p)`` so the
    draws are independent of basis seeds and of the sweep order.
    """
    p_array = np.asarray(list(p_values), dtype=int)
    if p_array.size == 0 or np.any(np.diff(p_array) <= 0) or p_array[0] < 1:
        raise InvalidInput("p_values must be strictly increasing positive counts")
    train_data = as_snapshots(train, "train")
    test_data = as_snapshots(test, "test")

    first_basis = model.clone()._fit_basis(train_data)
    reconstruction_prior = resolve_prior(
        prior, n_modes=first_basis.n_modes, noise=model.noise, train=train_data
    )

    ls_scores = []
    rls_scores = []
    for p in p_array:
        try:
            fitted = model.clone(n_sensors=int(p)).fit(train_data)
            gamma = fitted.get_selected_sensors()
            measurements = test_data[:, gamma.indices]
            if noise_std > 0:
                rng = np.random.default_rng([noise_seed, int(p)])
                measurements = measurements + noise_std * rng.standard_normal(
                    measurements.shape
                )
            basis = fitted.basis
            rm_ls = reconstruct.build_ls(basis, gamma)
            rm_rls = reconstruct.build_rls(basis, gamma, reconstruction_prior)
            ls_states = reconstruct.reconstruct_states(rm_ls, basis, measurements)
            rls_states = reconstruct.reconstruct_states(rm_rls, basis, measurements)
        except SenseplaceError as exc:
            raise CurvePointError(int(p), str(exc)) from exc
        ls_scores.append(float(np.sqrt(np.mean((ls_states - test_data) ** 2))))
        rls_scores.append(float(np.sqrt(np.mean((rls_states - test_data) ** 2))))

    return RmseCurve(p_array, np.array(ls_scores), np.array(rls_scores))
