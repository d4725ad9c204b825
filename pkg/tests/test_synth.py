"""Tests for the analytic benchmark densities."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from hte.errors import ConfigError
from hte.synth import Beta, DensitySpec, Exponential, Laplace, Mixture1D, Uniform, make_type


class TestTypeConstruction:
    def test_type_i_pdf_values(self):
        spec = make_type("type-i", 1)
        assert spec.pdf(np.array([0.2])) == pytest.approx(0.7 / 0.4, rel=1e-12)
        assert spec.pdf(np.array([0.5])) == 0.0

    def test_type_i_product_rule(self):
        spec = make_type("type-i", 2)
        assert spec.pdf(np.array([0.2, 0.2])) == pytest.approx(1.75**2, rel=1e-12)

    def test_beta_toy_pdf_factorial_oracle(self):
        # 1/B(3,10) = 12!/(2! 9!) = 660
        norm = math.factorial(12) // (math.factorial(2) * math.factorial(9))
        assert norm == 660
        expected = norm * 0.2**2 * 0.8**9
        spec = make_type("beta-toy", 1)
        assert spec.pdf(np.array([0.2])) == pytest.approx(expected, rel=1e-12)

    def test_out_of_support_coordinate_zeroes_product(self):
        spec = make_type("type-ii", 3)
        x = np.array([0.2, -1.0, 0.2])
        assert spec.pdf(x) == 0.0

    def test_type_iv_needs_two_dims(self):
        with pytest.raises(ConfigError):
            make_type("type-iv", 1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            make_type("type-v", 2)

    def test_dimension_counts(self):
        assert make_type("type-iii", 5).dim == 5
        assert make_type("type-iv", 5).dim == 5


class TestMarginalMass:
    @pytest.mark.parametrize("kind", ["type-i", "type-ii", "type-iii", "beta-toy"])
    def test_univariate_mass_is_one(self, kind):
        spec = make_type(kind, 1)
        marginal = spec.marginals[0]
        # breakpoints keep the adaptive rule from skipping narrow components
        mass, _ = integrate.quad(
            lambda x: float(marginal.pdf(np.array([x]))[0]),
            -30.0,
            30.0,
            limit=400,
            points=[0.0, 0.4, 0.5, 0.7, 1.0, 2.0, 4.0],
        )
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_type_iv_marginal_masses(self):
        spec = make_type("type-iv", 2)
        for marginal in spec.marginals:
            mass, _ = integrate.quad(lambda x: float(marginal.pdf(np.array([x]))[0]),
                                     -5.0, 60.0, limit=400)
            assert mass == pytest.approx(1.0, abs=1e-6)


class TestSampling:
    def test_type_i_component_frequencies(self):
        spec = make_type("type-i", 1)
        draws = spec.sample(100000, np.random.default_rng(0))[:, 0]
        upper = np.mean((draws >= 0.7) & (draws <= 1.0))
        assert upper == pytest.approx(0.3, abs=0.01)

    def test_seeded_reproducibility(self):
        spec = make_type("type-iii", 3)
        a = spec.sample(500, np.random.default_rng(4))
        b = spec.sample(500, np.random.default_rng(4))
        assert np.array_equal(a, b)

    def test_type_iv_exponential_dim_mean(self):
        spec = make_type("type-iv", 3)
        draws = spec.sample(100000, np.random.default_rng(5))
        expected = spec.marginals[0].mean()
        assert draws[:, 0].mean() == pytest.approx(expected, abs=0.05)
        assert draws[:, 1].mean() == pytest.approx(expected, abs=0.05)
        # last dimension is the uniform one
        assert draws[:, 2].mean() == pytest.approx(2.5, abs=0.05)

    @pytest.mark.parametrize(
        "prim",
        [
            Uniform(0.7, 1.0),
            Beta(2, 10),
            Beta(3, 10),
            Laplace(0.0, 0.5),
            Exponential(2.0),
        ],
        ids=["uniform", "beta-2-10", "beta-3-10", "laplace", "exponential"],
    )
    def test_primitive_sampler_matches_cdf(self, prim):
        draws = prim.sample(10000, np.random.default_rng(6))
        result = stats.kstest(draws, lambda x: prim.cdf(x))
        assert result.pvalue > 0.001

    def test_mixture_sampler_matches_cdf(self):
        spec = make_type("type-iii", 1)
        marginal = spec.marginals[0]
        draws = marginal.sample(10000, np.random.default_rng(7))
        result = stats.kstest(draws, lambda x: marginal.cdf(x))
        assert result.pvalue > 0.001


class TestMixtureValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            Mixture1D([(0.5, Uniform(0, 1)), (0.6, Uniform(1, 2))])

    def test_weights_must_be_positive(self):
        with pytest.raises(ConfigError):
            Mixture1D([(1.2, Uniform(0, 1)), (-0.2, Uniform(1, 2))])

    def test_bad_primitive_parameters(self):
        with pytest.raises(ConfigError):
            Uniform(1.0, 1.0)
        with pytest.raises(ConfigError):
            Beta(0.0, 2.0)
        with pytest.raises(ConfigError):
            Laplace(0.0, 0.0)
        with pytest.raises(ConfigError):
            Exponential(-1.0)


class TestSerialization:
    @pytest.mark.parametrize("kind,d", [("type-i", 2), ("type-iv", 3), ("beta-toy", 2)])
    def test_json_round_trip(self, kind, d):
        spec = make_type(kind, d)
        back = DensitySpec.from_json_dict(spec.to_json_dict())
        assert back.to_json_dict() == spec.to_json_dict()
        x = spec.sample(50, np.random.default_rng(8))
        assert np.array_equal(back.pdf(x), spec.pdf(x))
