"""Tests for the Gaussian KDE comparator."""

import numpy as np
import pytest
from scipy import integrate

from hte.baselines import KdeModel, fit_kde
from hte.errors import DataError


class TestFit:
    def test_scott_factor_1d(self):
        data = np.linspace(0.0, 1.0, 100)[:, None]
        model = KdeModel.fit(data)
        assert model.bandwidth_factor == pytest.approx(100 ** (-0.2), rel=1e-12)
        assert model.bandwidth_factor == pytest.approx(0.39811, abs=1e-5)

    def test_kernel_covariance_is_scaled_sample_covariance(self):
        rng = np.random.default_rng(0)
        data = rng.normal(size=(50, 3))
        model = KdeModel.fit(data)
        assert np.allclose(model.covariance, np.cov(data, rowvar=False, ddof=1))

    def test_collinear_data_rejected(self):
        t = np.linspace(0.0, 1.0, 40)
        data = np.stack([t, 2.0 * t], axis=1)
        with pytest.raises(DataError):
            KdeModel.fit(data)

    def test_needs_more_points_than_dims(self):
        with pytest.raises(DataError):
            KdeModel.fit(np.random.default_rng(1).normal(size=(3, 3)))

    def test_two_point_symmetry(self):
        model = fit_kde(np.array([[0.0], [1.0]]))
        left = model.evaluate(np.array([0.25]))
        right = model.evaluate(np.array([0.75]))
        assert abs(left - right) < 1e-12


class TestEvaluate:
    def test_quadrature_mass(self):
        rng = np.random.default_rng(2)
        model = KdeModel.fit(rng.normal(size=(50, 1)))
        mass, _ = integrate.quad(
            lambda x: model.evaluate(np.array([[x]]))[0], -12.0, 12.0, limit=300
        )
        assert mass == pytest.approx(1.0, abs=1e-4)

    def test_positive_on_and_beyond_the_data(self):
        # strictly positive wherever exp(-z^2/2) is representable; the far
        # tail underflows to exactly 0.0 in double precision
        rng = np.random.default_rng(3)
        data = rng.normal(size=(30, 2))
        model = KdeModel.fit(data)
        queries = np.vstack([data, data + 2.0, [[4.0, -4.0], [6.0, 6.0]]])
        assert np.all(model.evaluate(queries) > 0.0)
        assert np.all(model.evaluate(np.array([[1e4, -1e4]])) >= 0.0)

    def test_training_point_beats_far_point(self):
        model = fit_kde(np.array([[0.0], [1.0]]))
        assert model.evaluate(np.array([0.0])) >= model.evaluate(np.array([7.0]))

    def test_translation_equivariance(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(60, 2))
        queries = rng.normal(size=(15, 2))
        shift = np.array([3.25, -1.5])
        base = KdeModel.fit(data).evaluate(queries)
        shifted = KdeModel.fit(data + shift).evaluate(queries + shift)
        assert np.allclose(base, shifted, atol=1e-12)

    def test_matches_direct_gaussian_mixture(self):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(20, 2))
        model = KdeModel.fit(data)
        kernel_cov = model.bandwidth_factor**2 * model.covariance
        inv = np.linalg.inv(kernel_cov)
        norm = 1.0 / np.sqrt((2.0 * np.pi) ** 2 * np.linalg.det(kernel_cov))
        queries = rng.normal(size=(7, 2))
        expected = np.array(
            [
                np.mean(
                    [norm * np.exp(-0.5 * (q - x) @ inv @ (q - x)) for x in data]
                )
                for q in queries
            ]
        )
        assert np.allclose(model.evaluate(queries), expected, rtol=1e-10)

    def test_chunking_consistency(self):
        rng = np.random.default_rng(6)
        model = KdeModel.fit(rng.normal(size=(40, 2)))
        queries = rng.normal(size=(1111, 2))
        whole = model.evaluate(queries)
        parts = np.concatenate([model.evaluate(queries[:700]), model.evaluate(queries[700:])])
        assert np.array_equal(whole, parts)

    def test_json_round_trip(self):
        rng = np.random.default_rng(7)
        model = KdeModel.fit(rng.normal(size=(25, 2)))
        back = KdeModel.from_json_dict(model.to_json_dict())
        queries = rng.normal(size=(9, 2))
        assert np.allclose(back.evaluate(queries), model.evaluate(queries), rtol=1e-15)
