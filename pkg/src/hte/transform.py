"""Random histogram transforms.

A histogram transform is the affine map ``H(x) = R @ (s * x) + b`` built
from a uniformly random rotation ``R``, a diagonal stretching with
log-uniform (Jeffreys prior) scales ``s``, and a translation ``b`` drawn
uniformly from the unit cube.  Flooring ``H(x)`` componentwise assigns
each point to a cell of the randomized histogram partition; every cell
has input-space volume ``prod(1 / s)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

ORTHOGONALITY_TOL = 1e-10


def as_points(data) -> np.ndarray:
    """Coerce a point set to shape (n, d); 1-D input is n points in d=1."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        return data[:, None]
    if data.ndim != 2:
        raise ConfigError(f"point sets must be 1-D or 2-D arrays, got ndim={data.ndim}")
    return data


def sample_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a Haar-uniform d x d rotation matrix (det = +1).

    QR-decomposes a matrix of iid standard normals, fixes the sign
    ambiguity by forcing the triangular factor's diagonal positive, and
    flips one column if the determinant comes out -1.
    """
    if d < 1:
        raise ConfigError(f"rotation dimension must be >= 1, got {d}")
    w = rng.standard_normal((d, d))
    q, r = np.linalg.qr(w)
    q = q * np.where(np.diag(r) < 0.0, -1.0, 1.0)
    if np.linalg.det(q) < 0.0:
        q[:, 0] = -q[:, 0]
    return q


def reference_scale(data: np.ndarray) -> float:
    """Data-driven scale s_hat = (3.5 * sigma)^-1 * n^(1/(2+d)).

    sigma pools the per-dimension spread: sqrt(trace(V) / d) with V the
    unbiased sample covariance.
    """
    data = as_points(data)
    n, d = data.shape
    if n < 2:
        raise DataError(f"reference scale needs at least 2 points, got {n}")
    centered = data - data.mean(axis=0)
    trace_cov = float((centered**2).sum() / (n - 1))
    sigma = np.sqrt(trace_cov / d)
    if sigma == 0.0:
        raise DataError("all points identical: zero variance, no reference scale")
    return float(n ** (1.0 / (2.0 + d)) / (3.5 * sigma))


@dataclass(frozen=True)
class StretchConfig:
    """Log-uniform stretch window, offsets relative to a reference scale.

    Each log(s_i) is drawn from
    ``[s_min_exp + log(s_hat), s_max_exp + log(s_hat)]``.  Equal offsets
    give a deterministic fixed scale (used by bandwidth-schedule studies).
    ``reference_scale`` may be left None, in which case fitting code
    computes s_hat from the training data.
    """

    s_min_exp: float
    s_max_exp: float
    reference_scale: float | None = None

    def __post_init__(self):
        if self.s_min_exp > self.s_max_exp:
            raise ConfigError(
                f"s_min_exp={self.s_min_exp} must not exceed s_max_exp={self.s_max_exp}"
            )
        if self.reference_scale is not None and not self.reference_scale > 0.0:
            raise ConfigError("reference_scale must be positive")

    def resolve(self, data: np.ndarray) -> "StretchConfig":
        """Fill in the reference scale from data if not already set."""
        if self.reference_scale is not None:
            return self
        return StretchConfig(self.s_min_exp, self.s_max_exp, reference_scale(data))


def sample_stretch(d: int, cfg: StretchConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw per-dimension scales s with log(s_i) uniform in the config window."""
    if cfg.reference_scale is None:
        raise ConfigError("stretch config has no reference scale; call resolve() first")
    lo = cfg.s_min_exp + np.log(cfg.reference_scale)
    hi = cfg.s_max_exp + np.log(cfg.reference_scale)
    return np.exp(rng.uniform(lo, hi, size=d))


def sample_translation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a translation vector uniformly from [0, 1)^d."""
    return rng.uniform(0.0, 1.0, size=d)


@dataclass(frozen=True)
class HistogramTransform:
    """Affine map H(x) = rotation @ (scales * x) + translation.

    Immutable once constructed; all methods are pure.  ``bin_widths``
    (h = 1/s) are the cell edge lengths measured in the input space.
    """

    rotation: np.ndarray
    scales: np.ndarray
    translation: np.ndarray
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=float)
        scales = np.asarray(self.scales, dtype=float)
        translation = np.asarray(self.translation, dtype=float)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "translation", translation)
        d = rotation.shape[0]
        if rotation.shape != (d, d) or d < 1:
            raise ConfigError(f"rotation must be square and nonempty, got {rotation.shape}")
        if scales.shape != (d,) or translation.shape != (d,):
            raise ConfigError("scales/translation must be length-d vectors")
        if np.abs(rotation.T @ rotation - np.eye(d)).max() > ORTHOGONALITY_TOL:
            raise ConfigError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(rotation) - 1.0) > ORTHOGONALITY_TOL:
            raise ConfigError("rotation matrix must have determinant +1")
        if not np.all(scales > 0.0):
            raise ConfigError("scales must be strictly positive")
        if np.any(translation < 0.0) or np.any(translation >= 1.0):
            raise ConfigError("translation components must lie in [0, 1)")

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    @property
    def bin_widths(self) -> np.ndarray:
        """Input-space cell edge lengths h = 1/s."""
        return 1.0 / self.scales

    @property
    def cell_volume(self) -> float:
        """Volume of one partition cell: prod(h) = 1/det(R S)."""
        return float(np.prod(self.bin_widths))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Map one point (d,) or a batch (n, d) through H."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ConfigError(f"point dimension {x.shape[-1]} != transform dimension {self.dim}")
        return (x * self.scales) @ self.rotation.T + self.translation

    def invert(self, y: np.ndarray) -> np.ndarray:
        """Inverse map x = S^-1 R^T (y - b)."""
        y = np.asarray(y, dtype=float)
        return ((y - self.translation) @ self.rotation) / self.scales

    def bin_index(self, x: np.ndarray) -> np.ndarray:
        """Integer cell index floor(H(x)); bins are half-open [k, k+1)."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DataError("bin_index requires finite coordinates")
        return np.floor(self.apply(x)).astype(np.int64)

    @classmethod
    def sample(
        cls,
        d: int,
        cfg: StretchConfig,
        rng: np.random.Generator,
        seed: int | None = None,
    ) -> "HistogramTransform":
        """Draw rotation, stretch, and translation from one stream."""
        return cls(
            rotation=sample_rotation(d, rng),
            scales=sample_stretch(d, cfg, rng),
            translation=sample_translation(d, rng),
            seed=seed,
        )

    @classmethod
    def rotation_only(cls, d: int, rng: np.random.Generator, seed: int | None = None):
        """Pure rotation (unit scales, zero translation)."""
        return cls(
            rotation=sample_rotation(d, rng),
            scales=np.ones(d),
            translation=np.zeros(d),
            seed=seed,
        )

    def to_json_dict(self) -> dict:
        return {
            "d": self.dim,
            "R": [float(v) for v in self.rotation.ravel()],
            "s": [float(v) for v in self.scales],
            "b": [float(v) for v in self.translation],
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "HistogramTransform":
        d = int(obj["d"])
        return cls(
            rotation=np.asarray(obj["R"], dtype=float).reshape(d, d),
            scales=np.asarray(obj["s"], dtype=float),
            translation=np.asarray(obj["b"], dtype=float),
            seed=obj.get("seed"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "HistogramTransform":
        return cls.from_json_dict(json.loads(text))
