import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def random_orthonormal(rows, cols, seed):
    """Orthonormal-column matrix from a seeded Gaussian draw."""
    g = np.random.default_rng(seed).standard_normal((rows, cols))
    q, _ = np.linalg.qr(g)
    return q[:, :cols]
