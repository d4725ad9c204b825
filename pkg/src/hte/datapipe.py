"""Real-data ingestion and preprocessing.

Pure transformations on an immutable Dataset: CSV loading with located
parse errors, correlated-column pruning, unit-interval normalization,
PCA reduction, and seeded splitting.  Every step appends its parameters
to the dataset's provenance log so runs are auditable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class Dataset:
    """Numeric matrix plus column names and an append-only provenance log."""

    rows: np.ndarray
    column_names: tuple[str, ...]
    provenance: tuple[dict, ...] = field(default_factory=tuple)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if rows.ndim != 2:
            raise DataError(f"dataset rows must be 2-D, got ndim={rows.ndim}")
        if len(self.column_names) != rows.shape[1]:
            raise DataError("column name count does not match column count")
        if not np.all(np.isfinite(rows)):
            raise DataError("dataset contains non-finite entries")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def provenance_json(self) -> str:
        return json.dumps(list(self.provenance), sort_keys=True)


def load_csv(
    path,
    delimiter: str = ",",
    header: bool = True,
    drop_columns: tuple[str, ...] = (),
) -> Dataset:
    """Parse a delimited numeric file; errors carry row/column locations.

    Rows and columns in error messages are 1-based file coordinates.
    ``drop_columns`` removes named columns before numeric conversion, so
    discrete-valued attributes can be excluded up front.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            raw = [row for row in reader if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not raw:
        raise DataError(f"{path}: file is empty")
    if header:
        names = [name.strip() for name in raw[0]]
        body = raw[1:]
        first_row = 2
    else:
        names = [f"col{i}" for i in range(len(raw[0]))]
        body = raw
        first_row = 1
    if not body:
        raise DataError(f"{path}: no data rows")

    drop = set(drop_columns)
    unknown = drop - set(names)
    if unknown:
        raise ConfigError(f"drop_columns not present in file: {sorted(unknown)}")
    keep = [i for i, name in enumerate(names) if name not in drop]

    width = len(names)
    matrix = np.empty((len(body), len(keep)))
    for r, row in enumerate(body):
        if len(row) != width:
            raise DataError(
                f"{path}: row {first_row + r} has {len(row)} cells, expected {width}"
            )
        for out_c, c in enumerate(keep):
            cell = row[c].strip()
            try:
                matrix[r, out_c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: unparseable cell {cell!r} at row {first_row + r}, "
                    f"column {c + 1} ({names[c]})"
                ) from None
    ds = Dataset(
        rows=matrix,
        column_names=tuple(names[c] for c in keep),
        provenance=(
            {
                "step": "load_csv",
                "path": str(path),
                "delimiter": delimiter,
                "header": header,
                "drop_columns": sorted(drop),
            },
        ),
    )
    return ds


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 0 when either column is constant."""
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da @ da) * (db @ db))
    if denom == 0.0:
        return 0.0
    return float(da @ db / denom)


def prune_correlated(ds: Dataset, threshold: float = 0.98) -> Dataset:
    """Drop the higher-indexed column of any pair correlated above threshold.

    Pairs are scanned in index order and the scan restarts after each
    drop, so the result is deterministic.
    """
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"correlation threshold must be in (0, 1], got {threshold}")
    keep = list(range(ds.d))
    dropped: list[str] = []
    changed = True
    while changed:
        changed = False
        for a_pos in range(len(keep)):
            for b_pos in range(a_pos + 1, len(keep)):
                r = _pearson(ds.rows[:, keep[a_pos]], ds.rows[:, keep[b_pos]])
                if abs(r) > threshold:
                    dropped.append(ds.column_names[keep[b_pos]])
                    del keep[b_pos]
                    changed = True
                    break
            if changed:
                break
    return Dataset(
        rows=ds.rows[:, keep],
        column_names=tuple(ds.column_names[i] for i in keep),
        provenance=ds.provenance
        + ({"step": "prune_correlated", "threshold": threshold, "dropped": dropped},),
    )


def normalize_unit(ds: Dataset) -> Dataset:
    """Rescale each column to [0, 1]; constant columns become all zeros."""
    mins = ds.rows.min(axis=0)
    maxs = ds.rows.max(axis=0)
    span = maxs - mins
    constant = [ds.column_names[i] for i in np.flatnonzero(span == 0.0)]
    safe_span = np.where(span == 0.0, 1.0, span)
    rows = (ds.rows - mins) / safe_span
    return Dataset(
        rows=rows,
        column_names=ds.column_names,
        provenance=ds.provenance
        + (
            {
                "step": "normalize_unit",
                "min": [float(v) for v in mins],
                "max": [float(v) for v in maxs],
                "constant_columns": constant,
            },
        ),
    )


def pca_reduce(ds: Dataset, k: int) -> Dataset:
    """Project onto the top-k principal directions of the column covariance.

    Components use a deterministic sign convention: the loading with the
    largest magnitude is positive.  Provenance records the explained
    variance ratio of each kept component.
    """
    if not 1 <= k <= ds.d:
        raise ConfigError(f"PCA target k={k} must lie in [1, {ds.d}]")
    centered = ds.rows - ds.rows.mean(axis=0)
    cov = np.cov(centered, rowvar=False, ddof=1).reshape(ds.d, ds.d)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    for j in range(ds.d):
        lead = np.argmax(np.abs(eigvecs[:, j]))
        if eigvecs[lead, j] < 0.0:
            eigvecs[:, j] = -eigvecs[:, j]
    total = float(eigvals.sum())
    ratios = [float(v / total) if total > 0 else 0.0 for v in eigvals[:k]]
    projected = centered @ eigvecs[:, :k]
    return Dataset(
        rows=projected,
        column_names=tuple(f"pc{i + 1}" for i in range(k)),
        provenance=ds.provenance
        + ({"step": "pca_reduce", "k": k, "explained_variance_ratio": ratios},),
    )


def split(ds: Dataset, fractions, rng: np.random.Generator) -> tuple[Dataset, ...]:
    """Seeded permutation split into len(fractions) disjoint, exhaustive parts."""
    fractions = [float(f) for f in fractions]
    if len(fractions) < 2:
        raise ConfigError("split needs at least two fractions")
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must be positive and sum to 1, got {fractions}")
    perm = rng.permutation(ds.n)
    bounds = np.round(np.cumsum(fractions) * ds.n).astype(int)
    bounds[-1] = ds.n
    parts = []
    start = 0
    for part_index, stop in enumerate(bounds):
        if stop <= start:
            raise DataError(
                f"split fraction {fractions[part_index]} yields an empty part for n={ds.n}"
            )
        take = np.sort(perm[start:stop])
        parts.append(
            Dataset(
                rows=ds.rows[take],
                column_names=ds.column_names,
                provenance=ds.provenance
                + (
                    {
                        "step": "split",
                        "fractions": fractions,
                        "part": part_index,
                        "rows": int(stop - start),
                    },
                ),
            )
        )
        start = stop
    return tuple(parts)
