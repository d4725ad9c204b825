"""Fixed-bin histogram transform estimator and ensemble averaging.

One member counts training points into the unit integer lattice of its
transformed space, stored sparsely (only occupied cells).  The density
at x is count / (n * cell_volume) for the cell containing x, zero for
unseen cells.  An ensemble averages T independently transformed members.
"""

from __future__ import annotations

import json

import numpy as np

from . import rng as rngmod
from .errors import ConfigError, DataError
from .transform import HistogramTransform, StretchConfig, as_points

GRID_FORMAT = "nhte-v1"


class GridEstimator:
    """Sparse histogram over one transform's integer lattice."""

    def __init__(self, transform: HistogramTransform, counts: dict, n: int):
        if n < 1:
            raise DataError("estimator needs at least one training point")
        total = sum(counts.values())
        if total != n:
            raise DataError(f"cell counts sum to {total}, expected n={n}")
        self.transform = transform
        self.counts = counts
        self.n = int(n)
        self.volume = transform.cell_volume

    @classmethod
    def fit(cls, data: np.ndarray, transform: HistogramTransform) -> "GridEstimator":
        """Count each training point into its cell; keep occupied cells only."""
        data = as_points(data)
        if data.shape[0] == 0:
            raise DataError("cannot fit a histogram on empty data")
        if data.shape[1] != transform.dim:
            raise ConfigError(
                f"data dimension {data.shape[1]} != transform dimension {transform.dim}"
            )
        indices = transform.bin_index(data)
        cells, cell_counts = np.unique(indices, axis=0, return_counts=True)
        counts = {tuple(map(int, cell)): int(c) for cell, c in zip(cells, cell_counts)}
        return cls(transform, counts, data.shape[0])

    @property
    def dim(self) -> int:
        return self.transform.dim

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        """Density at one point (d,) or a batch (q, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        indices = self.transform.bin_index(pts)
        unique, inverse = np.unique(indices, axis=0, return_inverse=True)
        scale = 1.0 / (self.n * self.volume)
        per_cell = np.array(
            [self.counts.get(tuple(map(int, cell)), 0) * scale for cell in unique]
        )
        values = per_cell[inverse]
        return float(values[0]) if single else values

    def total_mass(self) -> float:
        """Sparse-sum mass: sum over cells of (count/(n vol)) * vol."""
        scale = 1.0 / (self.n * self.volume)
        return float(sum(c * scale * self.volume for c in self.counts.values()))

    def to_json_dict(self) -> dict:
        cells = sorted(self.counts.items())
        return {
            "format": GRID_FORMAT,
            "transform": self.transform.to_json_dict(),
            "n": self.n,
            "cells": [[list(idx), count] for idx, count in cells],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GridEstimator":
        if obj.get("format") != GRID_FORMAT:
            raise ConfigError(f"unsupported grid model format {obj.get('format')!r}")
        counts = {tuple(int(v) for v in idx): int(c) for idx, c in obj["cells"]}
        return cls(HistogramTransform.from_json_dict(obj["transform"]), counts, int(obj["n"]))


class EnsembleModel:
    """Average of T fitted members sharing one dimension.

    Members need ``evaluate`` and ``dim``; grid and adaptive members both
    qualify (one kind per model).
    """

    def __init__(self, members: list):
        if not members:
            raise ConfigError("ensemble needs at least one member")
        dims = {member.dim for member in members}
        if len(dims) != 1:
            raise ConfigError(f"members disagree on dimension: {sorted(dims)}")
        self.members = list(members)

    @property
    def T(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def member_values(self, x: np.ndarray) -> np.ndarray:
        """(T, q) matrix of member densities at a batch of points."""
        pts = np.asarray(x, dtype=float)
        return np.stack([member.evaluate(pts) for member in self.members])

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        """Arithmetic mean of member densities."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        values = self.member_values(pts).mean(axis=0)
        return float(values[0]) if single else values

    def to_json_dict(self) -> dict:
        members = [m.to_json_dict() for m in self.members]
        fmt = members[0]["format"]
        return {"format": fmt, "T": self.T, "members": members}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def fit_ensemble(
    data: np.ndarray,
    T: int,
    cfg: StretchConfig,
    seed: rngmod.Seed,
) -> EnsembleModel:
    """Fit T grid members on independently sampled transforms.

    The stretch window is anchored at the data-driven reference scale
    unless ``cfg`` already fixes one.  Member t draws its transform from
    substream t of ``seed``, so refitting with the same seed reproduces
    the model bit for bit regardless of fitting order.
    """
    if T < 1:
        raise ConfigError(f"ensemble size must be >= 1, got {T}")
    data = as_points(data)
    resolved = cfg.resolve(data)
    d = data.shape[1]
    members = []
    for stream in rngmod.member_streams(seed, T):
        transform = HistogramTransform.sample(d, resolved, stream)
        members.append(GridEstimator.fit(data, transform))
    return EnsembleModel(members)
