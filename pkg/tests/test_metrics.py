"""Tests for accuracy measures and slope estimation."""

import math

import numpy as np
import pytest

from hte.errors import ConfigError
from hte.metrics import (
    EPSILON,
    EvalReport,
    anll,
    eval_report,
    fit_power_law,
    mae,
    rate_slope,
    report_from_values,
)

TEST_POINTS = np.linspace(0.0, 1.0, 7)[:, None]


def constant(value):
    return lambda x: np.full(x.shape[0], float(value))


class TestMae:
    def test_identical_functions(self):
        assert mae(constant(2.0), constant(2.0), TEST_POINTS) == 0.0

    def test_zero_versus_one(self):
        assert mae(constant(0.0), constant(1.0), TEST_POINTS) == 1.0

    def test_hand_pairs(self):
        test = np.zeros((2, 1))
        est = lambda x: np.array([1.0, 3.0])
        truth = lambda x: np.array([2.0, 1.0])
        assert mae(est, truth, test) == pytest.approx(1.5, abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(0.1, 2.0, size=50)
        truths = rng.uniform(0.1, 2.0, size=50)
        perm = rng.permutation(50)
        a = np.mean(np.abs(values - truths))
        b = np.mean(np.abs(values[perm] - truths[perm]))
        assert a == pytest.approx(b, rel=1e-12)


class TestAnll:
    def test_unit_density(self):
        assert abs(anll(constant(1.0), TEST_POINTS)) < 1e-9

    def test_all_zero_hits_guard(self):
        expected = -math.log(EPSILON)
        assert expected == pytest.approx(36.0437, abs=5e-4)
        assert anll(constant(0.0), TEST_POINTS) == pytest.approx(expected, abs=1e-9)

    def test_exponential_values(self):
        test = np.zeros((2, 1))
        est = lambda x: np.array([math.e, math.e**3])
        assert anll(est, test) == pytest.approx(-2.0, abs=1e-9)

    def test_monotone_in_density(self):
        rng = np.random.default_rng(1)
        base = rng.uniform(0.0, 2.0, size=30)
        lifted = base + rng.uniform(0.0, 1.0, size=30)
        low = -np.mean(np.log(base + EPSILON))
        high = -np.mean(np.log(lifted + EPSILON))
        assert high <= low

    def test_epsilon_is_machine_increment(self):
        assert EPSILON == float(np.spacing(1.0))


class TestEvalReport:
    def test_counts_guard_hits(self):
        values = np.array([0.0, 1.0, 0.0, 2.0])
        report = report_from_values(values)
        assert report.epsilon_hits == 2
        assert report.n_test == 4
        assert report.mae is None

    def test_mae_included_with_truth(self):
        report = report_from_values(np.array([1.0, 3.0]), np.array([2.0, 1.0]))
        assert report.mae == pytest.approx(1.5)

    def test_eval_report_matches_direct_metrics(self):
        rng = np.random.default_rng(2)
        test = rng.normal(size=(40, 2))
        est = lambda x: np.abs(x[:, 0]) + 0.1
        truth = lambda x: np.abs(x[:, 1]) + 0.1
        report = eval_report(est, test, truth=truth)
        assert report.anll == pytest.approx(anll(est, test), rel=1e-15)
        assert report.mae == pytest.approx(mae(est, truth, test), rel=1e-15)

    def test_validation(self):
        with pytest.raises(ConfigError):
            EvalReport(anll=0.0, n_test=0, epsilon_hits=0)
        with pytest.raises(ConfigError):
            EvalReport(anll=0.0, n_test=2, epsilon_hits=3)

    def test_csv_row_schema(self):
        report = report_from_values(np.array([1.0, 2.0]))
        row = report.csv_row(dataset="x", method="kde", d=2, n=10, seed=1)
        assert row["mae"] == ""
        assert row["T"] == "" and row["m"] == ""
        assert row["epsilon_hits"] == 0


class TestRateSlope:
    def test_exact_power_law(self):
        ns = [100, 200, 400, 800, 1600]
        pairs = [(n, 3.7 * n ** (-1.0 / 3.0)) for n in ns]
        assert rate_slope(pairs) == pytest.approx(-1.0 / 3.0, abs=1e-10)

    def test_constant_errors(self):
        pairs = [(n, 0.25) for n in (10, 100, 1000)]
        assert rate_slope(pairs) == pytest.approx(0.0, abs=1e-12)

    def test_noisy_power_law_recovered(self):
        rng = np.random.default_rng(3)
        ns = np.logspace(2, 5, 20)
        truth = -0.41
        errors = 2.0 * ns**truth * np.exp(rng.normal(0.0, 0.01, size=20))
        slope, _, stderr = fit_power_law(zip(ns, errors))
        assert slope == pytest.approx(truth, abs=0.02)
        assert 0.0 < stderr < 0.02

    def test_scale_invariance(self):
        pairs = [(10, 0.5), (100, 0.3), (1000, 0.11), (10000, 0.05)]
        scaled = [(n, 17.3 * e) for n, e in pairs]
        assert rate_slope(scaled) == pytest.approx(rate_slope(pairs), abs=1e-12)

    def test_too_few_pairs(self):
        with pytest.raises(ConfigError):
            rate_slope([(10, 1.0), (100, 0.5)])

    def test_nonpositive_errors_rejected(self):
        with pytest.raises(ConfigError):
            rate_slope([(10, 1.0), (100, 0.0), (1000, 0.1)])
