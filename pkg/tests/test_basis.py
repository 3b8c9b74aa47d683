import numpy as np
import pytest

from senseplace.basis import (
    GaussianPrior,
    decreasing_prior,
    fit_custom,
    fit_identity,
    fit_random_projection,
    fit_svd,
    flat_prior,
)
from senseplace.errors import DegeneratePrior, InvalidRank, RankDeficientBasis
from senseplace.optimizers import qr_select

from conftest import random_orthonormal


class TestIdentity:
    def test_small(self):
        basis = fit_identity(np.ones((2, 3)))
        np.testing.assert_array_equal(basis.modes, np.eye(3))

    def test_single_state(self):
        basis = fit_identity(np.ones((5, 1)))
        np.testing.assert_array_equal(basis.modes, [[1.0]])

    def test_orthonormal(self, rng):
        basis = fit_identity(rng.standard_normal((4, 6)))
        np.testing.assert_array_equal(basis.modes.T @ basis.modes, np.eye(6))


class TestSvdBasis:
    def test_rank_one_rows(self):
        v = np.array([0.6, 0.8, 0.0])
        x = np.tile(v, (4, 1))
        basis = fit_svd(x, 1)
        mode = basis.modes[:, 0]
        assert min(np.linalg.norm(mode - v), np.linalg.norm(mode + v)) < 1e-12
        np.testing.assert_allclose(basis.singular_values, [2.0])  # sqrt(N) = 2

    def test_identity_snapshots(self):
        basis = fit_svd(np.eye(4), 4)
        np.testing.assert_allclose(basis.singular_values, np.ones(4), atol=1e-12)
        # permutation-sign variant of the canonical axes
        np.testing.assert_allclose(
            np.abs(basis.modes.T @ basis.modes), np.eye(4), atol=1e-12
        )

    def test_matches_full_svd_truncation(self):
        x = np.random.default_rng(17).standard_normal((20, 15))
        basis = fit_svd(x, 5)
        _, _, vh = np.linalg.svd(x)
        oracle = vh[:5].T
        # subspace angle via projector difference
        p_fit = basis.modes @ basis.modes.T
        p_oracle = oracle @ oracle.T
        assert np.max(np.abs(p_fit - p_oracle)) < 1e-8

    def test_modes_orthonormal(self, rng):
        basis = fit_svd(rng.standard_normal((12, 9)), 6)
        gram = basis.modes.T @ basis.modes
        assert np.max(np.abs(gram - np.eye(6))) < 1e-10

    def test_projection_optimality(self):
        x = np.random.default_rng(23).standard_normal((15, 10))
        r = 4
        basis = fit_svd(x, r)
        best = np.linalg.norm(x - x @ basis.modes @ basis.modes.T)
        for seed in range(5):
            q = random_orthonormal(10, r, seed)
            other = np.linalg.norm(x - x @ q @ q.T)
            assert best <= other + 1e-8

    def test_centering_flag(self):
        x = np.random.default_rng(4).standard_normal((8, 5)) + 10.0
        centered = fit_svd(x, 2, center=True)
        oracle = fit_svd(x - x.mean(axis=0), 2)
        np.testing.assert_allclose(
            np.abs(centered.modes), np.abs(oracle.modes), atol=1e-12
        )

    def test_rank_out_of_range(self):
        with pytest.raises(InvalidRank):
            fit_svd(np.ones((3, 4)), 4)


class TestRandomProjection:
    def test_deterministic_given_seed(self):
        a = fit_random_projection(20, 5, seed=3)
        b = fit_random_projection(20, 5, seed=3)
        np.testing.assert_array_equal(a.modes, b.modes)

    def test_column_norm_concentration(self):
        basis = fit_random_projection(500, 500, seed=0)
        norms = np.linalg.norm(basis.modes, axis=0)
        assert np.all(np.abs(norms - 1.0) < 0.1)

    def test_entry_mean_near_zero(self):
        n, r = 300, 40
        basis = fit_random_projection(n, r, seed=1)
        # entries are N(0, 1/r); the sample mean has std 1/sqrt(r n r)
        bound = 3.0 / np.sqrt(r * n * r)
        assert abs(basis.modes.mean()) < bound


class TestCustomBasis:
    def test_identity_passthrough(self, rng):
        x = rng.standard_normal((6, 4))
        custom = fit_custom(np.eye(4))
        identity = fit_identity(x)
        np.testing.assert_array_equal(custom.modes, identity.modes)
        assert (
            qr_select(custom, 4).indices.tolist()
            == qr_select(identity, 4).indices.tolist()
        )

    def test_external_svd_modes_match_builtin_path(self):
        x = np.random.default_rng(29).standard_normal((10, 8))
        svd_basis = fit_svd(x, 3)
        custom = fit_custom(svd_basis.modes)
        assert (
            qr_select(custom, 3).indices.tolist()
            == qr_select(svd_basis, 3).indices.tolist()
        )

    def test_duplicated_column_rejected(self):
        modes = np.ones((4, 2))
        with pytest.raises(RankDeficientBasis):
            fit_custom(modes)

    def test_not_orthonormalized(self):
        modes = np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        basis = fit_custom(modes)
        np.testing.assert_array_equal(basis.modes, modes)


class TestPriors:
    def test_rank_one_decreasing_prior(self):
        v = np.array([1.0, 0.0])
        x = np.tile(v, (4, 1))
        prior = decreasing_prior(x, 1, noise=0.5)
        np.testing.assert_allclose(prior.std, [1.0])  # sigma_1/sqrt(N) = 2/2
        assert prior.noise == 0.5

    def test_flat_prior_values(self):
        prior = flat_prior(100, 1000.0, 1.0)
        assert prior.std.shape == (100,)
        assert np.all(prior.std == 1000.0)

    def test_scaled_identity_prior(self):
        prior = flat_prior(8, 4.0, 1.0)
        np.testing.assert_array_equal(prior.std, np.full(8, 4.0))

    def test_entries_nonincreasing(self, rng):
        x = rng.standard_normal((12, 10))
        prior = decreasing_prior(x, 6, noise=1.0)
        assert np.all(np.diff(prior.std) <= 0)

    def test_zero_singular_value_rejected(self):
        x = np.tile([1.0, 0.0], (4, 1))  # rank one
        with pytest.raises(DegeneratePrior):
            decreasing_prior(x, 2, noise=1.0)

    def test_degenerate_prior_validation(self):
        with pytest.raises(DegeneratePrior):
            GaussianPrior(np.array([1.0, 0.0]), 1.0)
        with pytest.raises(DegeneratePrior):
            GaussianPrior(np.array([1.0, 1.0]), 0.0)
