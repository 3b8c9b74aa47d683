"""Noise-induced uncertainty of reconstructed fields and energy landscapes.

The reconstruction error covariance is modes @ A (eta^2) A^T @ modes^T for
reconstruction matrix A. Only its diagonal is ever materialized: the
per-location standard deviation, computed row by row in O(n r p) without
forming the n-by-n covariance. It depends on the basis, the sensors, and
the noise level — never on any snapshot data.
"""

from __future__ import annotations

import numpy as np

from .basis import BasisModes, GaussianPrior
from .errors import InvalidInput
from .optimizers import one_point_energies, pair_energies, selection_indices
from .reconstruct import ReconstructionMatrix


def uncertainty_heatmap(
    basis: BasisModes, rm: ReconstructionMatrix, noise: float
) -> np.ndarray:
    """Per-location standard deviation of the reconstruction under sensor noise."""
    if not np.isfinite(noise) or noise < 0:
        raise InvalidInput("noise magnitude must be finite and >= 0")
    propagated = basis.modes @ rm.a_matrix   # (n, p)
    return noise * np.sqrt(np.einsum("ij,ij->i", propagated, propagated))


def one_pt_energy_landscape(basis: BasisModes, prior: GaussianPrior) -> np.ndarray:
    """Single-sensor information gain at every location (nonpositive)."""
    return one_point_energies(basis, prior)


def two_pt_energy_landscape(basis: BasisModes, prior: GaussianPrior, ref) -> np.ndarray:
    """Total pair interaction of each location with the placed sensors.

    At a placed sensor the self term is excluded, so a single-sensor
    reference yields exactly that sensor's interaction field and is zero
    at the sensor itself.
    """
    idx = selection_indices(ref)
    if idx.size == 0:
        raise InvalidInput("two-point landscape needs at least one reference sensor")
    energies = pair_energies(basis, prior, idx)
    values = energies.selected_j.sum(axis=0)
    for k, j in enumerate(idx):
        values[j] -= energies.selected_j[k, j]
    return values
