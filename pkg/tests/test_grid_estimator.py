"""Tests for the fixed-bin estimator and ensemble averaging."""

import json
import math

import numpy as np
import pytest

from hte.errors import ConfigError, DataError
from hte.grid_estimator import EnsembleModel, GridEstimator, fit_ensemble
from hte.metrics import mae
from hte.rng import substream
from hte.synth import make_type
from hte.transform import HistogramTransform, StretchConfig

DATA_1D = np.array([0.1, 0.2, 0.6, 0.9])


def identity_1d(scale=1.0, offset=0.0):
    return HistogramTransform(np.eye(1), np.array([scale]), np.array([offset]))


class TestFit:
    def test_unit_bin_collects_everything(self):
        g = GridEstimator.fit(DATA_1D, identity_1d())
        assert g.counts == {(0,): 4}
        assert g.evaluate(np.array([0.5])) == pytest.approx(1.0)

    def test_half_width_bins(self):
        g = GridEstimator.fit(DATA_1D, identity_1d(scale=2.0))
        assert g.counts == {(0,): 2, (1,): 2}
        assert g.evaluate(np.array([0.3])) == pytest.approx(1.0)
        assert g.evaluate(np.array([0.75])) == pytest.approx(1.0)

    def test_count_conservation(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 200))
            data = rng.normal(size=(n, d))
            t = HistogramTransform.sample(
                d, StretchConfig(0.0, 1.0, reference_scale=1.0), rng
            )
            g = GridEstimator.fit(data, t)
            assert sum(g.counts.values()) == n

    def test_empty_data_rejected(self):
        with pytest.raises(DataError):
            GridEstimator.fit(np.empty((0, 2)), identity_1d())

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            GridEstimator.fit(np.zeros((3, 2)), identity_1d())

    def test_brute_force_recount(self):
        # direct per-point recount with plain python floors
        rng = np.random.default_rng(1)
        for _ in range(20):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 51))
            data = rng.normal(size=(n, d)) * 3.0
            t = HistogramTransform.sample(
                d, StretchConfig(-0.5, 0.5, reference_scale=1.0), rng
            )
            g = GridEstimator.fit(data, t)
            expected: dict = {}
            for row in data:
                y = t.rotation @ (t.scales * row) + t.translation
                key = tuple(int(math.floor(v)) for v in y)
                expected[key] = expected.get(key, 0) + 1
            assert g.counts == expected


class TestEvaluate:
    def test_unseen_cell_is_zero(self):
        g = GridEstimator.fit(DATA_1D, identity_1d())
        assert g.evaluate(np.array([5.5])) == 0.0

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(2)
        g = GridEstimator.fit(rng.normal(size=(100, 2)),
                              HistogramTransform.sample(2, StretchConfig(0, 1, reference_scale=1.0), rng))
        queries = rng.normal(size=(500, 2)) * 4.0
        assert np.all(g.evaluate(queries) >= 0.0)

    def test_piecewise_constant(self):
        rng = np.random.default_rng(3)
        t = HistogramTransform.sample(2, StretchConfig(0, 1, reference_scale=1.0), rng)
        g = GridEstimator.fit(rng.normal(size=(200, 2)), t)
        x = rng.normal(size=2)
        # a second point in the same cell evaluates identically
        y = t.invert(t.apply(x) + 0.2 * (t.bin_index(x) + 0.5 - t.apply(x)))
        assert np.array_equal(t.bin_index(x), t.bin_index(y))
        assert g.evaluate(x) == g.evaluate(y)

    def test_mass_by_fine_grid_quadrature_1d(self):
        g = GridEstimator.fit(DATA_1D, identity_1d(scale=2.0))
        grid = np.linspace(-1.0, 2.0, 6_000_001)
        mid = 0.5 * (grid[:-1] + grid[1:])
        values = g.evaluate(mid[:, None])
        mass = values.sum() * (grid[1] - grid[0])
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_sparse_sum_mass_exact(self):
        rng = np.random.default_rng(4)
        t = HistogramTransform.sample(3, StretchConfig(0, 1, reference_scale=2.0), rng)
        g = GridEstimator.fit(rng.normal(size=(321, 3)), t)
        assert g.total_mass() == pytest.approx(1.0, abs=1e-12)


class TestEnsemble:
    def test_single_member_matches_member(self):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(50, 2))
        model = fit_ensemble(data, 1, StretchConfig(0.0, 1.0), seed=9)
        member = model.members[0]
        queries = rng.normal(size=(40, 2))
        assert np.array_equal(model.evaluate(queries), member.evaluate(queries))

    def test_mean_of_members_exactly(self):
        rng = np.random.default_rng(6)
        data = rng.normal(size=(80, 2))
        model = fit_ensemble(data, 5, StretchConfig(0.0, 1.0), seed=10)
        queries = rng.normal(size=(30, 2))
        stacked = np.stack([m.evaluate(queries) for m in model.members])
        assert np.array_equal(model.evaluate(queries), stacked.mean(axis=0))

    def test_hand_mean(self):
        class Fake:
            def __init__(self, value):
                self.value = value
                self.dim = 1

            def evaluate(self, x):
                return np.full(x.shape[0], self.value)

        model = EnsembleModel([Fake(0.0), Fake(2.0)])
        assert model.evaluate(np.zeros((3, 1))).tolist() == [1.0, 1.0, 1.0]

    def test_bit_identical_refit(self):
        rng = np.random.default_rng(7)
        data = rng.normal(size=(60, 2))
        a = fit_ensemble(data, 5, StretchConfig(0.0, 1.0), seed=123)
        b = fit_ensemble(data, 5, StretchConfig(0.0, 1.0), seed=123)
        assert a.to_json() == b.to_json()

    def test_ensemble_beats_single_on_beta_toy(self):
        spec = make_type("beta-toy", 2)
        test = spec.sample(400, np.random.default_rng(8))
        mae_by_T = {1: [], 20: []}
        for rep in range(50):
            train = spec.sample(500, substream(100 + rep, 0))
            model = fit_ensemble(train, 20, StretchConfig(0.0, 1.0), seed=200 + rep)
            members = model.member_values(test)
            truth = spec.pdf(test)
            mae_by_T[1].append(np.mean(np.abs(members[0] - truth)))
            mae_by_T[20].append(np.mean(np.abs(members.mean(axis=0) - truth)))
        assert np.mean(mae_by_T[20]) < np.mean(mae_by_T[1])

    def test_quadrature_mass_of_ensemble_1d(self):
        rng = np.random.default_rng(9)
        data = rng.beta(3, 10, size=(300, 1))
        model = fit_ensemble(data, 5, StretchConfig(0.0, 1.0), seed=11)
        grid = np.linspace(-0.5, 1.5, 2_000_001)
        mid = 0.5 * (grid[:-1] + grid[1:])
        mass = model.evaluate(mid[:, None]).sum() * (grid[1] - grid[0])
        assert mass == pytest.approx(1.0, abs=1e-5)

    def test_mismatched_dims_rejected(self):
        rng = np.random.default_rng(10)
        a = GridEstimator.fit(rng.normal(size=(10, 1)), identity_1d())
        t2 = HistogramTransform(np.eye(2), np.ones(2), np.zeros(2))
        b = GridEstimator.fit(rng.normal(size=(10, 2)), t2)
        with pytest.raises(ConfigError):
            EnsembleModel([a, b])

    def test_invalid_T(self):
        with pytest.raises(ConfigError):
            fit_ensemble(np.zeros((5, 1)), 0, StretchConfig(0.0, 1.0), seed=0)


class TestSerialization:
    def test_grid_round_trip(self):
        rng = np.random.default_rng(11)
        t = HistogramTransform.sample(2, StretchConfig(0, 1, reference_scale=1.0), rng)
        g = GridEstimator.fit(rng.normal(size=(40, 2)), t)
        obj = g.to_json_dict()
        assert obj["format"] == "nhte-v1"
        back = GridEstimator.from_json_dict(json.loads(json.dumps(obj)))
        queries = rng.normal(size=(25, 2))
        assert np.array_equal(back.evaluate(queries), g.evaluate(queries))
        assert back.counts == g.counts

    def test_ensemble_round_trip_via_loader(self):
        from hte.experiments import load_model_json

        rng = np.random.default_rng(12)
        model = fit_ensemble(rng.normal(size=(30, 2)), 3, StretchConfig(0, 1), seed=13)
        back = load_model_json(json.loads(model.to_json()))
        queries = rng.normal(size=(20, 2))
        assert np.array_equal(back.evaluate(queries), model.evaluate(queries))

    def test_bad_format_rejected(self):
        with pytest.raises(ConfigError):
            GridEstimator.from_json_dict({"format": "nhte-v999", "cells": [], "n": 1})
