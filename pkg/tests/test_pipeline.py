import numpy as np
import pytest

from senseplace.basis import GaussianPrior, decreasing_prior, flat_prior
from senseplace.constraints import Circle, ConstraintSpec, ImageGrid, get_constraint_indices
from senseplace.errors import CurvePointError, InvalidCount, InvalidInput, NotFitted
from senseplace.pipeline import SensorModel, resolve_prior, rmse_curve
from senseplace.synthetic import smooth_field_snapshots


@pytest.fixture(scope="module")
def train():
    return smooth_field_snapshots(60, 10, 10, n_modes=20, seed=41)


@pytest.fixture(scope="module")
def test_data():
    return smooth_field_snapshots(25, 10, 10, n_modes=20, seed=42)


class TestFit:
    def test_qr_svd(self, train):
        model = SensorModel(n_sensors=5, basis="svd", n_modes=5).fit(train)
        gamma = model.get_selected_sensors()
        assert len(gamma) == 5
        assert np.unique(gamma.indices).size == 5

    def test_tpgr_flat_prior(self, train):
        model = SensorModel(
            n_sensors=25,
            basis="svd",
            n_modes=40,
            optimizer="tpgr",
            prior=flat_prior(40, 1000.0, 1.0),
            noise=1.0,
        ).fit(train)
        assert len(model.get_selected_sensors()) == 25

    def test_refit_replaces_state(self, train, test_data):
        model = SensorModel(n_sensors=4, basis="svd", n_modes=4)
        first = model.fit(train).get_selected_sensors().indices.copy()
        model.fit(test_data)
        model.fit(train)
        np.testing.assert_array_equal(model.get_selected_sensors().indices, first)

    def test_not_fitted_errors(self):
        model = SensorModel(n_sensors=3, basis="svd", n_modes=3)
        with pytest.raises(NotFitted):
            model.get_selected_sensors()
        with pytest.raises(NotFitted):
            model.score(np.zeros((2, 4)))

    def test_gqr_requires_constraint(self, train):
        model = SensorModel(n_sensors=3, basis="svd", n_modes=5, optimizer="gqr")
        with pytest.raises(InvalidInput):
            model.fit(train)

    def test_ccqr_requires_costs(self, train):
        model = SensorModel(n_sensors=3, basis="svd", n_modes=5, optimizer="ccqr")
        with pytest.raises(InvalidInput):
            model.fit(train)

    def test_sensor_count_validated(self, train):
        model = SensorModel(n_sensors=101, basis="svd", n_modes=5)
        with pytest.raises(InvalidCount):
            model.fit(train)

    def test_unknown_kinds_rejected(self):
        with pytest.raises(InvalidInput):
            SensorModel(n_sensors=3, basis="wavelet")
        with pytest.raises(InvalidInput):
            SensorModel(n_sensors=3, optimizer="annealing")


class TestSensorAccessors:
    def test_qr_full_ranking(self, train):
        model = SensorModel(n_sensors=3, basis="svd", n_modes=6).fit(train)
        all_sensors = model.get_all_sensors()
        selected = model.get_selected_sensors()
        assert len(all_sensors) == train.shape[1]
        assert len(selected) == 3
        np.testing.assert_array_equal(selected.indices, all_sensors.indices[:3])

    def test_qr_ranked_count_capped_at_modes(self, train):
        model = SensorModel(n_sensors=10, basis="svd", n_modes=6).fit(train)
        assert model.get_selected_sensors().n_ranked == 6

    def test_tpgr_all_equals_selected(self, train):
        model = SensorModel(
            n_sensors=7,
            basis="svd",
            n_modes=10,
            optimizer="tpgr",
            prior=flat_prior(10, 10.0, 1.0),
        ).fit(train)
        np.testing.assert_array_equal(
            model.get_all_sensors().indices, model.get_selected_sensors().indices
        )
        assert len(model.get_all_sensors()) == 7

    @pytest.mark.parametrize("optimizer", ["qr", "tpgr"])
    def test_prefix_nesting(self, train, optimizer):
        prior = flat_prior(8, 5.0, 1.0) if optimizer == "tpgr" else None
        small = SensorModel(
            n_sensors=4, basis="svd", n_modes=8, optimizer=optimizer, prior=prior
        ).fit(train)
        big = SensorModel(
            n_sensors=5, basis="svd", n_modes=8, optimizer=optimizer, prior=prior
        ).fit(train)
        np.testing.assert_array_equal(
            small.get_selected_sensors().indices,
            big.get_selected_sensors().indices[:4],
        )

    def test_gqr_prefix_nesting_max_n(self, train):
        grid = ImageGrid(10, 10)
        idx = get_constraint_indices(Circle(5, 5, 3), grid)
        spec = ConstraintSpec(idx_constrained=idx, mode="max_n", s=1)
        selections = [
            SensorModel(
                n_sensors=p, basis="svd", n_modes=8, optimizer="gqr", constraint=spec
            )
            .fit(train)
            .get_selected_sensors()
            .indices
            for p in (5, 6)
        ]
        np.testing.assert_array_equal(selections[0], selections[1][:5])


class TestDeterminism:
    def test_identical_configs_identical_results(self, train, test_data):
        def run():
            model = SensorModel(
                n_sensors=6,
                basis="random_projection",
                n_modes=12,
                seed=77,
                optimizer="tpgr",
                prior=flat_prior(12, 100.0, 0.5),
                noise=0.5,
            ).fit(train)
            return model.get_selected_sensors().indices.copy()

        np.testing.assert_array_equal(run(), run())

    def test_curve_determinism(self, train, test_data):
        model = SensorModel(n_sensors=4, basis="svd", n_modes=8)
        prior = decreasing_prior(train, 8, 0.1)
        a = rmse_curve(model, train, test_data, [2, 4, 6], prior, noise_std=0.1, noise_seed=3)
        b = rmse_curve(model, train, test_data, [2, 4, 6], prior, noise_std=0.1, noise_seed=3)
        np.testing.assert_array_equal(a.rmse_ls, b.rmse_ls)
        np.testing.assert_array_equal(a.rmse_rls, b.rmse_rls)


class TestModelReconstruction:
    def test_score_in_span_noiseless(self, train):
        model = SensorModel(n_sensors=8, basis="svd", n_modes=8).fit(train)
        basis = model.basis
        coeffs = np.random.default_rng(5).standard_normal((10, 8))
        in_span = coeffs @ basis.modes.T
        assert model.score(in_span, method="ls") <= 1e-8

    def test_predict_roundtrip(self, train):
        model = SensorModel(
            n_sensors=6,
            basis="svd",
            n_modes=6,
            prior=flat_prior(6, 10.0, 0.1),
            noise=0.1,
        ).fit(train)
        gamma = model.get_selected_sensors()
        snapshot = train[0]
        out = model.predict(snapshot[gamma.indices])
        assert out.state.shape == (train.shape[1],)
        np.testing.assert_allclose(out.state, model.basis.modes @ out.coefficients)

    def test_default_prior_warns(self, train):
        model = SensorModel(n_sensors=4, basis="svd", n_modes=4).fit(train)
        with pytest.warns(UserWarning, match="flat prior"):
            model.reconstruction_matrix("rls")

    def test_std_matches_uq_hand_case(self, train):
        model = SensorModel(n_sensors=5, basis="svd", n_modes=5).fit(train)
        sigma = model.std(noise=0.2, method="ls")
        assert sigma.shape == (train.shape[1],)
        assert np.all(sigma >= 0)

    def test_landscapes_from_model(self, train):
        prior = decreasing_prior(train, 6, 0.2)
        model = SensorModel(
            n_sensors=5, basis="svd", n_modes=6, optimizer="tpgr", prior=prior
        ).fit(train)
        one = model.one_pt_energy_landscape()
        two = model.two_pt_energy_landscape()
        assert one.shape == two.shape == (train.shape[1],)
        assert int(np.argmin(one)) == int(model.get_selected_sensors().indices[0])


class TestRmseCurve:
    def test_in_span_noiseless_ls_is_exact(self, train):
        model = SensorModel(n_sensors=8, basis="svd", n_modes=8)
        basis_modes = SensorModel(n_sensors=8, basis="svd", n_modes=8).fit(train).basis.modes
        coeffs = np.random.default_rng(9).standard_normal((12, 8))
        in_span = coeffs @ basis_modes.T
        curve = rmse_curve(model, train, in_span, [8], prior=flat_prior(8, 1e6, 1.0))
        assert curve.rmse_ls[0] <= 1e-8

    def test_rls_finite_when_undersampled(self, train):
        model = SensorModel(n_sensors=4, basis="svd", n_modes=8)
        prior = decreasing_prior(train, 8, 0.1)
        curve = rmse_curve(model, train, train, [2, 4, 6], prior)
        assert np.all(np.isfinite(curve.rmse_rls))

    def test_errors_carry_offending_p(self, train):
        grid = ImageGrid(10, 10)
        spec = ConstraintSpec(
            idx_constrained=get_constraint_indices(Circle(5, 5, 3), grid),
            mode="max_n",
            s=1,
        )
        model = SensorModel(
            n_sensors=4, basis="svd", n_modes=6, optimizer="gqr", constraint=spec
        )
        prior = flat_prior(6, 10.0, 1.0)
        with pytest.raises(CurvePointError) as excinfo:
            rmse_curve(model, train, train, [4, 7], prior)  # 7 > r = 6
        assert excinfo.value.p == 7

    def test_p_values_must_increase(self, train):
        model = SensorModel(n_sensors=4, basis="svd", n_modes=6)
        with pytest.raises(InvalidInput):
            rmse_curve(model, train, train, [4, 4], flat_prior(6, 1.0, 1.0))


class TestResolvePrior:
    def test_flat_shorthand(self):
        prior = resolve_prior("flat", n_modes=5, noise=0.5, scale=3.0)
        np.testing.assert_array_equal(prior.std, np.full(5, 3.0))
        assert prior.noise == 0.5

    def test_decreasing_needs_train(self):
        with pytest.raises(InvalidInput):
            resolve_prior("decreasing", n_modes=3, noise=1.0)

    def test_explicit_vector(self):
        prior = resolve_prior([3.0, 2.0, 1.0], n_modes=3, noise=0.25)
        np.testing.assert_array_equal(prior.std, [3.0, 2.0, 1.0])

    def test_passthrough(self):
        given = GaussianPrior(np.array([1.0, 2.0]), 0.1)
        assert resolve_prior(given, n_modes=2) is given

    def test_none_warns_and_defaults(self):
        with pytest.warns(UserWarning):
            prior = resolve_prior(None, n_modes=4)
        np.testing.assert_array_equal(prior.std, np.ones(4))
