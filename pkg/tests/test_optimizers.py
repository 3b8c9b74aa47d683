import itertools

import numpy as np
import pytest

from senseplace.basis import BasisModes, GaussianPrior, fit_custom, fit_svd, flat_prior
from senseplace.constraints import ConstraintSpec, ImageGrid, get_constraint_indices, Circle, Polygon
from senseplace.errors import (
    InfeasibleConstraint,
    InvalidCount,
    InvalidInput,
    RankDeficiencyWarning,
)
from senseplace.optimizers import (
    ccqr_select,
    exact_objective,
    gqr_select,
    one_point_energies,
    pair_energies,
    qr_select,
    tpgr_select,
)
from senseplace.synthetic import smooth_field_snapshots


def random_basis(n, r, seed):
    modes = np.random.default_rng(seed).standard_normal((n, r))
    return BasisModes(modes, "custom")


def log_det_information(modes, indices):
    phi = modes[np.asarray(indices, dtype=int)]
    sign, value = np.linalg.slogdet(phi.T @ phi)
    return value if sign > 0 else -np.inf


class TestQrSelect:
    def test_hand_case(self):
        basis = BasisModes(np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]), "custom")
        assert qr_select(basis, 2).indices.tolist() == [1, 0]

    def test_first_pivot_is_max_row_norm(self, rng):
        modes = rng.standard_normal((20, 4))
        modes[7] *= 10.0
        assert qr_select(BasisModes(modes, "custom"), 1).indices[0] == 7

    def test_beats_random_subsets(self):
        basis = random_basis(50, 5, seed=101)
        gamma = qr_select(basis, 5)
        chosen = log_det_information(basis.modes, gamma.indices)
        rng = np.random.default_rng(999)
        for _ in range(200):
            subset = rng.choice(50, size=5, replace=False)
            assert chosen >= log_det_information(basis.modes, subset)

    def test_scale_invariance(self):
        basis = random_basis(30, 6, seed=5)
        scaled = BasisModes(basis.modes * 3.7, "custom")
        assert (
            qr_select(basis, 6).indices.tolist()
            == qr_select(scaled, 6).indices.tolist()
        )

    def test_count_validation(self):
        basis = random_basis(10, 3, seed=0)
        with pytest.raises(InvalidCount):
            qr_select(basis, 11)

    def test_oversampling_flagged_unranked(self):
        basis = random_basis(12, 4, seed=3)
        gamma = qr_select(basis, 7)
        assert len(gamma) == 7
        assert gamma.n_ranked == 4
        assert np.unique(gamma.indices).size == 7

    def test_rank_exhaustion_truncates_with_warning(self):
        modes = np.zeros((5, 2))
        modes[0, 0] = 1.0
        modes[1, 1] = 1.0
        basis = BasisModes(modes, "custom")
        with pytest.warns(RankDeficiencyWarning):
            gamma = qr_select(basis, 4)
        assert len(gamma) == 2
        assert not gamma.complete


class TestCcqrSelect:
    @pytest.mark.parametrize("seed", range(8))
    def test_zero_costs_reduce_to_qr(self, seed):
        basis = random_basis(25, 5, seed=seed)
        plain = qr_select(basis, 5).indices
        costed = ccqr_select(basis, 5, np.zeros(25)).indices
        assert plain.tolist() == costed.tolist()

    def test_huge_cost_excludes_index(self):
        basis = random_basis(15, 4, seed=21)
        preferred = int(qr_select(basis, 1).indices[0])
        costs = np.zeros(15)
        costs[preferred] = 1e30
        gamma = ccqr_select(basis, 10, costs)
        assert preferred not in gamma.indices.tolist()

    def test_cost_breaks_tie_between_equal_norms(self):
        modes = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        costs = np.array([0.5, 0.0, 0.0])
        gamma = ccqr_select(BasisModes(modes, "custom"), 2, costs)
        assert gamma.indices.tolist() == [1, 0]

    def test_cost_validation(self):
        basis = random_basis(5, 2, seed=0)
        with pytest.raises(InvalidInput):
            ccqr_select(basis, 2, np.ones(4))
        with pytest.raises(InvalidInput):
            ccqr_select(basis, 2, -np.ones(5))


def image_instance(seed, height=8, width=8, r=8):
    data = smooth_field_snapshots(40, height, width, n_modes=16, seed=seed)
    basis = fit_svd(data, r)
    return basis, ImageGrid(height, width)


class TestGqrSelect:
    @pytest.mark.parametrize("seed", range(8))
    def test_empty_constraints_reduce_to_qr(self, seed):
        basis, _ = image_instance(seed)
        spec = ConstraintSpec(mode="max_n", s=2)
        plain = qr_select(basis, 8).indices
        constrained = gqr_select(basis, 8, spec).indices
        assert plain.tolist() == constrained.tolist()

    @pytest.mark.parametrize("seed", range(6))
    def test_max_n_postcondition(self, seed):
        basis, grid = image_instance(seed)
        region = Circle(4, 4, 2.5)
        idx = get_constraint_indices(region, grid)
        spec = ConstraintSpec(idx_constrained=idx, mode="max_n", s=1)
        gamma = gqr_select(basis, 8, spec)
        in_region = np.intersect1d(gamma.indices, idx)
        assert in_region.size <= 1

    @pytest.mark.parametrize("seed", range(6))
    def test_exact_n_postcondition(self, seed):
        basis, grid = image_instance(seed)
        region = Circle(4, 4, 3.0)
        idx = get_constraint_indices(region, grid)
        spec = ConstraintSpec(idx_constrained=idx, mode="exact_n", s=3)
        gamma = gqr_select(basis, 8, spec)
        assert np.intersect1d(gamma.indices, idx).size == 3

    def test_exact_n_circle_configuration(self):
        # circle at (20, 5) radius 5, exactly 4 sensors inside
        data = smooth_field_snapshots(60, 16, 32, n_modes=24, seed=77)
        basis = fit_svd(data, 10)
        grid = ImageGrid(16, 32)
        idx = get_constraint_indices(Circle(20, 5, 5), grid)
        spec = ConstraintSpec(idx_constrained=idx, mode="exact_n", s=4)
        gamma = gqr_select(basis, 10, spec)
        assert np.intersect1d(gamma.indices, idx).size == 4

    def test_box_with_zero_budget_stays_clear(self):
        # no sensors allowed inside the rectangular exclusion zone
        data = smooth_field_snapshots(60, 10, 10, n_modes=20, seed=13)
        basis = fit_svd(data, 8)
        grid = ImageGrid(10, 10)
        box = Polygon(((2.0, 2.0), (6.0, 2.0), (6.0, 7.0), (2.0, 7.0)))
        idx = get_constraint_indices(box, grid)
        spec = ConstraintSpec(idx_constrained=idx, mode="max_n", s=0)
        gamma = gqr_select(basis, 8, spec)
        assert np.intersect1d(gamma.indices, idx).size == 0

    @pytest.mark.parametrize("seed", range(6))
    def test_predetermined_prefix(self, seed):
        basis, _ = image_instance(seed)
        forced = [5, 17, 33]
        spec = ConstraintSpec(mode="predetermined", s=3)
        gamma = gqr_select(basis, 8, spec, predetermined=forced)
        assert gamma.indices[:3].tolist() == forced
        assert len(gamma) == 8

    @pytest.mark.parametrize("seed", range(6))
    def test_distance_postcondition(self, seed):
        basis, grid = image_instance(seed)
        spec = ConstraintSpec(mode="distance", d=2.5, geometry=grid)
        gamma = gqr_select(basis, 6, spec)
        coords = grid.coords()[gamma.indices]
        for a, b in itertools.combinations(coords, 2):
            assert np.linalg.norm(a - b) >= 2.5

    def test_distance_zero_reduces_to_qr(self):
        basis, grid = image_instance(3)
        spec = ConstraintSpec(mode="distance", d=0.0, geometry=grid)
        assert (
            gqr_select(basis, 8, spec).indices.tolist()
            == qr_select(basis, 8).indices.tolist()
        )

    def test_infeasible_counts_rejected_before_work(self):
        basis, grid = image_instance(1)
        spec = ConstraintSpec(idx_constrained=[0, 1], mode="exact_n", s=3)
        with pytest.raises(InfeasibleConstraint):
            gqr_select(basis, 8, spec)

    def test_exact_n_budget_exceeding_p_rejected(self):
        basis, grid = image_instance(1)
        spec = ConstraintSpec(idx_constrained=np.arange(20), mode="exact_n", s=9)
        with pytest.raises(InfeasibleConstraint):
            gqr_select(basis, 8, spec)

    def test_mid_run_infeasibility_carries_trace(self):
        # every location constrained with a one-sensor budget
        basis, grid = image_instance(2)
        spec = ConstraintSpec(idx_constrained=np.arange(64), mode="max_n", s=1)
        with pytest.raises(InfeasibleConstraint) as excinfo:
            gqr_select(basis, 4, spec)
        assert len(excinfo.value.trace.pivots) == 1

    def test_oversampling_refused(self):
        basis, _ = image_instance(0)
        spec = ConstraintSpec(mode="max_n", s=1)
        with pytest.raises(InvalidCount):
            gqr_select(basis, 9, spec)  # r = 8

    def test_distance_infeasible_when_domain_too_small(self):
        basis, grid = image_instance(4)
        spec = ConstraintSpec(mode="distance", d=100.0, geometry=grid)
        with pytest.raises(InfeasibleConstraint):
            gqr_select(basis, 2, spec)


class TestTpgrSelect:
    def test_hand_case_matches_brute_force(self):
        basis = BasisModes(np.array([[1.0], [2.0], [3.0]]), "custom")
        prior = GaussianPrior(np.array([1.0]), 1.0)
        gamma = tpgr_select(basis, 2, prior)
        assert gamma.indices.tolist() == [2, 1]
        # the greedy pair is also the exact-objective optimum here
        best = min(
            itertools.combinations(range(3), 2),
            key=lambda pair: exact_objective(basis, list(pair), prior),
        )
        assert sorted(gamma.indices.tolist()) == sorted(best)

    def test_orthogonal_rows_order_by_scaled_norm(self):
        modes = np.diag([3.0, 5.0, 1.0, 4.0])
        basis = BasisModes(modes, "custom")
        prior = flat_prior(4, 1.0, 1.0)
        gamma = tpgr_select(basis, 4, prior)
        assert gamma.indices.tolist() == [1, 3, 0, 2]

    def test_flat_prior_large_instance(self):
        data = smooth_field_snapshots(150, 40, 50, n_modes=120, decay=1.0, seed=9)
        basis = fit_svd(data, 100)
        prior = flat_prior(100, 1000.0, 1.0)
        gamma = tpgr_select(basis, 25, prior)
        assert len(gamma) == 25
        assert np.unique(gamma.indices).size == 25

    @pytest.mark.parametrize("seed", range(10))
    def test_first_pick_matches_qr_with_isotropic_prior(self, seed):
        basis = random_basis(40, 6, seed=seed)
        prior = flat_prior(6, 10.0, 1.0)
        assert tpgr_select(basis, 1, prior).indices[0] == qr_select(basis, 1).indices[0]

    @pytest.mark.parametrize("seed", range(5))
    def test_greedy_objective_nonincreasing(self, seed):
        basis = random_basis(30, 5, seed=seed)
        prior = GaussianPrior(np.linspace(2.0, 0.5, 5), 0.7)
        gamma = tpgr_select(basis, 10, prior)
        assert np.all(gamma.step_scores <= 1e-12)

    def test_prior_length_mismatch(self):
        basis = random_basis(10, 3, seed=0)
        with pytest.raises(InvalidInput):
            tpgr_select(basis, 2, flat_prior(4, 1.0, 1.0))


class TestEnergyComponents:
    def test_one_point_energies_nonpositive(self):
        basis = random_basis(30, 5, seed=2)
        prior = GaussianPrior(np.linspace(1.5, 0.1, 5), 0.3)
        h = one_point_energies(basis, prior)
        assert np.all(h <= 0)

    def test_zero_row_has_zero_energy(self):
        modes = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 2.0]])
        prior = flat_prior(2, 1.0, 1.0)
        h = one_point_energies(BasisModes(modes, "custom"), prior)
        assert h[1] == 0.0

    def test_unit_row_isotropic(self):
        modes = np.array([[1.0, 0.0], [0.0, 0.0]])
        prior = flat_prior(2, 1.0, 1.0)
        h = one_point_energies(BasisModes(modes, "custom"), prior)
        np.testing.assert_allclose(h[0], -np.log(2.0))

    def test_pair_terms_nonnegative(self):
        basis = random_basis(25, 4, seed=6)
        prior = flat_prior(4, 2.0, 0.5)
        energies = pair_energies(basis, prior, [3, 11, 19])
        assert np.all(energies.selected_j >= 0)


class TestExactObjective:
    def prior(self, r, seed):
        std = np.random.default_rng(seed).uniform(0.5, 3.0, r)
        return GaussianPrior(std, 0.8)

    def test_empty_selection_is_prior_baseline(self):
        basis = random_basis(12, 4, seed=1)
        prior = self.prior(4, 1)
        baseline = 2.0 * np.sum(np.log(prior.std))
        np.testing.assert_allclose(exact_objective(basis, [], prior), baseline, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_single_sensor_determinant_lemma(self, seed):
        basis = random_basis(15, 4, seed=seed)
        prior = self.prior(4, seed)
        baseline = 2.0 * np.sum(np.log(prior.std))
        h = one_point_energies(basis, prior)
        for i in range(15):
            np.testing.assert_allclose(
                exact_objective(basis, [i], prior), baseline + h[i], atol=1e-9
            )

    @pytest.mark.parametrize("seed", range(5))
    def test_two_sensor_identity(self, seed):
        basis = random_basis(12, 4, seed=seed + 50)
        prior = self.prior(4, seed + 50)
        baseline = 2.0 * np.sum(np.log(prior.std))
        h = one_point_energies(basis, prior)
        for i, j in itertools.combinations(range(12), 2):
            pair = pair_energies(basis, prior, [j]).selected_j[0, i]
            expected = baseline + h[i] + h[j] + pair
            np.testing.assert_allclose(
                exact_objective(basis, [i, j], prior), expected, atol=1e-9
            )
