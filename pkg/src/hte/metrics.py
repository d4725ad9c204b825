"""Accuracy measures and empirical convergence-slope estimation.

MAE compares an estimate against a known truth; ANLL scores estimates on
held-out points with an epsilon guard so empty cells (density 0) stay
finite.  ``rate_slope`` fits a log-log power law to (n, error) pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Smallest positive double increment above 1; guards log(0) in ANLL.
EPSILON = float(np.spacing(1.0))

CSV_COLUMNS = (
    "dataset",
    "method",
    "d",
    "n",
    "T",
    "m",
    "seed",
    "anll",
    "mae",
    "epsilon_hits",
)


def _as_values(fn, test: np.ndarray) -> np.ndarray:
    values = np.asarray(fn(test), dtype=float)
    if values.shape != (test.shape[0],):
        raise ConfigError(f"density function returned shape {values.shape} for {test.shape[0]} points")
    return values


def mae(estimate, truth, test: np.ndarray) -> float:
    """Mean absolute deviation between two densities over test points."""
    test = np.asarray(test, dtype=float)
    return float(np.mean(np.abs(_as_values(estimate, test) - _as_values(truth, test))))


def anll(estimate, test: np.ndarray) -> float:
    """Average negative log-likelihood, -mean(log(f_hat + eps))."""
    test = np.asarray(test, dtype=float)
    return float(-np.mean(np.log(_as_values(estimate, test) + EPSILON)))


@dataclass(frozen=True)
class EvalReport:
    """One model scored on one test set."""

    anll: float
    n_test: int
    epsilon_hits: int
    mae: float | None = None

    def __post_init__(self):
        if self.n_test < 1:
            raise ConfigError("report needs at least one test point")
        if not 0 <= self.epsilon_hits <= self.n_test:
            raise ConfigError("epsilon_hits must lie in [0, n_test]")

    def to_json_dict(self) -> dict:
        return {
            "anll": self.anll,
            "mae": self.mae,
            "n_test": self.n_test,
            "epsilon_hits": self.epsilon_hits,
            "epsilon": EPSILON,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    def csv_row(self, *, dataset, method, d, n, seed, T="", m="") -> dict:
        """Row matching CSV_COLUMNS; empty strings for absent fields."""
        return {
            "dataset": dataset,
            "method": method,
            "d": d,
            "n": n,
            "T": T,
            "m": m,
            "seed": seed,
            "anll": repr(self.anll),
            "mae": "" if self.mae is None else repr(self.mae),
            "epsilon_hits": self.epsilon_hits,
        }


def report_from_values(values: np.ndarray, truth_values: np.ndarray | None = None) -> EvalReport:
    """Build a report from precomputed density values at the test points."""
    values = np.asarray(values, dtype=float)
    report_mae = None
    if truth_values is not None:
        report_mae = float(np.mean(np.abs(values - np.asarray(truth_values, dtype=float))))
    return EvalReport(
        anll=float(-np.mean(np.log(values + EPSILON))),
        n_test=values.shape[0],
        epsilon_hits=int(np.count_nonzero(values == 0.0)),
        mae=report_mae,
    )


def eval_report(estimate, test: np.ndarray, truth=None) -> EvalReport:
    """Score an estimate: ANLL (with guard-hit count) and MAE when truth is known."""
    test = np.asarray(test, dtype=float)
    values = _as_values(estimate, test)
    truth_values = _as_values(truth, test) if truth is not None else None
    return report_from_values(values, truth_values)


def rate_slope(pairs) -> float:
    """OLS slope of log(error) against log(n)."""
    slope, _, _ = fit_power_law(pairs)
    return slope


def fit_power_law(pairs) -> tuple[float, float, float]:
    """Fit log(error) = intercept + slope * log(n) by least squares.

    Returns (slope, intercept, stderr of the slope).  Needs >= 3 pairs
    with strictly positive errors.
    """
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ConfigError(f"power-law fit needs >= 3 pairs, got {len(pairs)}")
    ns = np.array([float(n) for n, _ in pairs])
    errors = np.array([float(e) for _, e in pairs])
    if np.any(errors <= 0.0) or np.any(ns <= 0.0):
        raise ConfigError("power-law fit needs positive n and positive errors")
    x = np.log(ns)
    y = np.log(errors)
    x_centered = x - x.mean()
    sxx = float(x_centered @ x_centered)
    if sxx == 0.0:
        raise ConfigError("power-law fit needs at least two distinct n values")
    slope = float(x_centered @ y / sxx)
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (intercept + slope * x)
    dof = len(pairs) - 2
    stderr = float(np.sqrt((residuals @ residuals) / dof / sxx)) if dof > 0 else 0.0
    return slope, intercept, stderr
