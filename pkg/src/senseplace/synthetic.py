"""Seeded smooth random fields for desk-scale experiments.

Snapshots are random combinations of fixed low-frequency plane waves over
an image grid with algebraically decaying amplitudes, plus optional i.i.d.
pixel noise. The wave patterns depend only on the grid shape, so matrices
generated with different seeds share the same underlying mode set.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput


def _wavenumber_pairs(count: int) -> list[tuple[int, int]]:
    """Lowest integer wavenumber pairs, sorted by |k|^2 then lexicographically."""
    limit = 1
    while (limit + 1) ** 2 - 1 < count:
        limit += 1
    pairs = [
        (kx, ky)
        for kx in range(limit + 1)
        for ky in range(limit + 1)
        if (kx, ky) != (0, 0)
    ]
    pairs.sort(key=lambda k: (k[0] ** 2 + k[1] ** 2, k[0], k[1]))
    return pairs[:count]


def field_patterns(height: int, width: int, n_patterns: int) -> np.ndarray:
    """(n_patterns, height*width) smooth basis patterns with unit pixel RMS."""
    if n_patterns < 1:
        raise InvalidInput("need at least one pattern")
    xs = np.arange(width) / width
    ys = np.arange(height) / height
    grid_x, grid_y = np.meshgrid(xs, ys)
    patterns = []
    for kx, ky in _wavenumber_pairs((n_patterns + 1) // 2):
        phase = 2 * np.pi * (kx * grid_x + ky * grid_y)
        patterns.append(np.cos(phase).ravel())
        patterns.append(np.sin(phase).ravel())
    stacked = np.array(patterns[:n_patterns])
    rms = np.sqrt(np.mean(stacked**2, axis=1))
    return stacked / rms[:, None]


def smooth_field_snapshots(
    n_snapshots: int,
    height: int,
    width: int,
    *,
    n_modes: int = 32,
    decay: float = 1.5,
    amplitude: float = 1.0,
    noise_std: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    """(n_snapshots, height*width) matrix of smooth random fields.

    Pattern j enters with amplitude ``amplitude * (1 + j)^-decay`` and an
    independent standard-normal coefficient per snapshot; ``noise_std``
    adds white pixel noise on top.
    """
    if n_snapshots < 1:
        raise InvalidInput("need at least one snapshot")
    if noise_std < 0:
        raise InvalidInput("noise_std must be >= 0")
    patterns = field_patterns(height, width, n_modes)
    amplitudes = amplitude * (1.0 + np.arange(n_modes)) ** -float(decay)
    rng = np.random.default_rng(seed)
    coefficients = rng.standard_normal((n_snapshots, n_modes)) * amplitudes
    data = coefficients @ patterns
    if noise_std > 0:
        data = data + noise_std * rng.standard_normal(data.shape)
    return data
