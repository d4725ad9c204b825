"""Gaussian kernel density estimation comparator.

Scott's rule bandwidth factor n^(-1/(d+4)) scales the full sample
covariance; evaluation is the exact mixture of n Gaussian kernels,
chunked so memory stays O(chunk * n) regardless of query count.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .errors import DataError
from .transform import as_points

_EVAL_CHUNK = 512


class KdeModel:
    """Gaussian KDE with covariance-scaled Scott bandwidth."""

    def __init__(self, points: np.ndarray, bandwidth_factor: float, covariance: np.ndarray):
        self.points = points
        self.bandwidth_factor = float(bandwidth_factor)
        self.covariance = covariance
        kernel_cov = bandwidth_factor**2 * covariance
        try:
            chol = linalg.cholesky(kernel_cov, lower=True)
        except linalg.LinAlgError as exc:
            raise DataError(
                "sample covariance is singular; reduce dimensionality "
                "(e.g. PCA) before fitting a KDE"
            ) from exc
        d = points.shape[1]
        # normalizer = ((2 pi)^d det(f^2 Sigma))^(-1/2); det from the Cholesky diagonal
        self.normalizer = float(
            (2.0 * np.pi) ** (-d / 2.0) / np.prod(np.diag(chol))
        )
        self._inv_chol = linalg.solve_triangular(chol, np.eye(d), lower=True)

    @classmethod
    def fit(cls, data: np.ndarray) -> "KdeModel":
        """Scott-rule fit: factor = n^(-1/(d+4)), kernel cov = factor^2 * Sigma_hat."""
        data = as_points(data)
        n, d = data.shape
        if n <= d:
            raise DataError(f"KDE needs more points than dimensions (n={n}, d={d})")
        covariance = np.cov(data, rowvar=False, ddof=1).reshape(d, d)
        factor = n ** (-1.0 / (d + 4.0))
        return cls(data, factor, covariance)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        """Mixture density at one point (d,) or a batch (q, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.shape[1] != self.dim:
            raise DataError(f"query dimension {pts.shape[1]} != model dimension {self.dim}")
        out = np.empty(pts.shape[0])
        for start in range(0, pts.shape[0], _EVAL_CHUNK):
            chunk = pts[start : start + _EVAL_CHUNK]
            diff = chunk[:, None, :] - self.points[None, :, :]
            white = diff @ self._inv_chol.T
            sq = np.einsum("qnd,qnd->qn", white, white)
            out[start : start + _EVAL_CHUNK] = np.exp(-0.5 * sq).mean(axis=1)
        values = out * self.normalizer
        return float(values[0]) if single else values

    def to_json_dict(self) -> dict:
        return {
            "format": "kde-v1",
            "points": [[float(v) for v in row] for row in self.points],
            "bandwidth_factor": self.bandwidth_factor,
            "covariance": [[float(v) for v in row] for row in self.covariance],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "KdeModel":
        if obj.get("format") != "kde-v1":
            raise DataError(f"unsupported KDE model format {obj.get('format')!r}")
        return cls(
            np.asarray(obj["points"], dtype=float),
            float(obj["bandwidth_factor"]),
            np.asarray(obj["covariance"], dtype=float),
        )


def fit_kde(data: np.ndarray) -> KdeModel:
    """Convenience wrapper for KdeModel.fit."""
    return KdeModel.fit(data)
