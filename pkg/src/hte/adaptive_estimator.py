"""Adaptive histogram transform ensembles.

Each member rotates the sample cloud (no stretch, no translation), then
recursively splits the padded bounding box of the rotated points until
every cell holds at most ``min_samples_split`` points.  Splits pick the
dimension whose point range is largest relative to its rescaled spread,
then cut at a quantile sitting away from the cell mean, so sparse
stretches are carved off instead of bisecting the bulk.  Each leaf's
mass is concentrated on the bounding box of its own points (its
support); density is count / (n * support volume) inside the support and
zero elsewhere, which keeps total mass at exactly 1 while empty margins
contribute nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import ConfigError, DataError
from .grid_estimator import EnsembleModel
from .transform import as_points, sample_rotation

TREE_FORMAT = "ahte-v1"

# Split value quantiles: far side of the mean, golden-section positions.
_NEAR_Q = 0.382
_FAR_Q = 0.618
_MEAN_Q = 0.60

# Per-dimension point values are rescaled onto this interval before their
# spread enters the ratio; only the window width matters for the argmax.
_VAR_SCALE_LO = 0.5
_VAR_SCALE_HI = 2.5
_VAR_SCALE_FACTOR = (_VAR_SCALE_HI - _VAR_SCALE_LO) ** 2

_BOX_PADDING = 1e-9

_EULER_MASCHERONI = 0.5772156649015329


@dataclass(frozen=True)
class SplitDecision:
    """Axis-aligned cut: lower child gets [lo, value), upper [value, hi)."""

    dim: int
    value: float


def _interp_quantile(sorted_vals: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile of pre-sorted values."""
    pos = q * (len(sorted_vals) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(sorted_vals) - 1)
    frac = pos - lo
    return float(sorted_vals[lo] + frac * (sorted_vals[hi] - sorted_vals[lo]))


def _max_gap_threshold(width, k):
    """Expected maximum spacing of k sorted points spanning ``width``.

    For k-1 uniform spacings the largest is about width * H(k-1)/(k-1);
    a gap at or above this is treated as genuinely sparse territory.
    """
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        harmonic = np.log(k - 1.0) + _EULER_MASCHERONI
        return np.where(k > 2, width * harmonic / (k - 1.0), width)


def _split_value(sorted_vals: np.ndarray) -> float:
    """Split coordinate within one cell's sorted values in the chosen dim.

    Cut at the midpoint of the largest inter-point gap when that gap
    exceeds its expected size under uniform spacing (a genuinely sparse
    stretch); otherwise fall back to the golden-section quantile on the
    far side of the cell mean.
    """
    gaps = np.diff(sorted_vals)
    g = int(np.argmax(gaps))
    width = sorted_vals[-1] - sorted_vals[0]
    if gaps[g] >= float(_max_gap_threshold(width, len(sorted_vals))):
        return float(0.5 * (sorted_vals[g] + sorted_vals[g + 1]))
    # strict-sequential sum, matching the grouped reduction the batched
    # fitter uses, so replayed decisions agree bitwise
    mean = np.add.reduceat(sorted_vals, np.array([0]))[0] / len(sorted_vals)
    if mean <= _interp_quantile(sorted_vals, _MEAN_Q):
        return _interp_quantile(sorted_vals, _FAR_Q)
    return _interp_quantile(sorted_vals, _NEAR_Q)


def _scaled_variances(variances: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """Spread of each dimension's values after rescaling onto the window.

    Affine rescaling of values onto [0.5, 2.5] multiplies the variance by
    (2/range)^2; zero-range dimensions get infinite spread so they never
    win the ratio.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(
            ranges > 0.0, _VAR_SCALE_FACTOR * variances / ranges**2, np.inf
        )


def _split_with_reason(points: np.ndarray, box: np.ndarray):
    """Pick a split for one cell, or explain why none is possible."""
    ranges = points.max(axis=0) - points.min(axis=0)
    if not ranges.any():
        return None, "zero-range"
    variances = points.var(axis=0, ddof=1)
    dim = int(np.argmax(ranges / _scaled_variances(variances, ranges)))
    vals = np.sort(points[:, dim])
    value = _split_value(vals)
    lo, hi = box[dim]
    if not (lo < value < hi):
        return None, "not-interior"
    n_lower = int(np.searchsorted(vals, value, side="left"))
    if n_lower == 0 or n_lower == len(vals):
        return None, "empty-child"
    return SplitDecision(dim, float(value)), None


def select_split(
    points: np.ndarray, cell_box: np.ndarray, min_samples_split: int
) -> SplitDecision | None:
    """Choose the split for a qualified cell, or None if it is degenerate.

    The winning dimension maximizes range over the variance of its values
    rescaled onto [0.5, 2.5] (ties to the lowest index).  The cut lands
    in the largest inter-point gap when that gap is wider than expected
    under uniform spacing, else at the 0.618 quantile when the cell mean
    is at or below the 0.6 quantile and at the 0.382 quantile otherwise.
    Returns None when the cut would leave a child empty or is not
    strictly interior to the cell.
    """
    points = as_points(points)
    if points.shape[0] <= min_samples_split:
        raise ConfigError(
            f"cell holds {points.shape[0]} points, not above min_samples_split="
            f"{min_samples_split}"
        )
    decision, _ = _split_with_reason(points, np.asarray(cell_box, dtype=float))
    return decision


class AdaptiveTree:
    """Binary space partition over a rotated sample cloud.

    Nodes are stored as parallel arrays (breadth-first order, lower child
    first).  Leaves carry their point count, support box, and support
    volume; the recorded ``reasons`` explain any leaf left with more than
    ``min_samples_split`` points.
    """

    def __init__(self, root_box, split_dim, split_value, left, right, counts,
                 supports, reasons, n, min_samples_split):
        self.root_box = np.asarray(root_box, dtype=float)
        self.split_dim = np.asarray(split_dim, dtype=np.intp)
        self.split_value = np.asarray(split_value, dtype=float)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.supports = np.asarray(supports, dtype=float)
        self.reasons = list(reasons)
        self.n = int(n)
        self.min_samples_split = int(min_samples_split)
        self.volumes = np.prod(self.supports[:, :, 1] - self.supports[:, :, 0], axis=1)
        leaf = self.split_dim < 0
        self._density = np.zeros(len(self.counts))
        self._density[leaf] = self.counts[leaf] / (self.n * self.volumes[leaf])

    @property
    def dim(self) -> int:
        return self.root_box.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.split_dim < 0))

    @classmethod
    def fit(cls, rotated_data: np.ndarray, min_samples_split: int) -> "AdaptiveTree":
        """Grow the partition until every cell holds <= min_samples_split points.

        The root is the empirical bounding box padded by a relative 1e-9
        margin (absolute for zero-width dimensions) so every training
        point is interior.  Cells that cannot split (all points
        identical, or any cut would empty a child) become leaves with the
        reason recorded.  After growth, each leaf's support shrinks to
        the bounding box of its own points whenever that box has positive
        volume.

        Growth is breadth-first (lower child numbered first) with each
        level's cell statistics computed by grouped reductions over the
        concatenated point segments; per-cell decisions match
        ``select_split``.
        """
        data = as_points(rotated_data)
        n, d = data.shape
        if n == 0:
            raise DataError("cannot fit an adaptive tree on empty data")
        if min_samples_split < 1:
            raise ConfigError(f"min_samples_split must be >= 1, got {min_samples_split}")
        if not np.all(np.isfinite(data)):
            raise DataError("adaptive tree requires finite coordinates")

        mins = data.min(axis=0)
        maxs = data.max(axis=0)
        width = maxs - mins
        pad = _BOX_PADDING * np.where(width > 0.0, width, 1.0)
        root_box = np.stack([mins - pad, maxs + pad], axis=1)

        split_dim: list[int] = []
        split_value: list[float] = []
        left: list[int] = []
        right: list[int] = []
        counts: list[int] = []
        boxes: list[np.ndarray] = []
        reasons: list[str | None] = []

        def new_node(count: int, box: np.ndarray) -> int:
            node = len(split_dim)
            split_dim.append(-1)
            split_value.append(np.nan)
            left.append(-1)
            right.append(-1)
            counts.append(count)
            boxes.append(box)
            reasons.append(None)
            return node

        root = new_node(n, root_box)
        # Cells still large enough to split: (node_id, point indices, box).
        level = [(root, np.arange(n), root_box)] if n > min_samples_split else []

        while level:
            lengths = np.array([idx.size for _, idx, _ in level])
            starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
            cat_idx = np.concatenate([idx for _, idx, _ in level])
            cell_boxes = np.stack([box for _, _, box in level])
            pts = data[cat_idx]

            cell_min = np.minimum.reduceat(pts, starts, axis=0)
            cell_max = np.maximum.reduceat(pts, starts, axis=0)
            ranges = cell_max - cell_min
            k = lengths[:, None].astype(float)
            means = np.add.reduceat(pts, starts, axis=0) / k
            dev = pts - np.repeat(means, lengths, axis=0)
            variances = np.add.reduceat(dev * dev, starts, axis=0) / (k - 1.0)
            dims = np.argmax(ranges / _scaled_variances(variances, ranges), axis=1)

            # Per-cell order statistics of the chosen dimension: one stable
            # sort groups each segment's values in place.
            total = cat_idx.size
            chosen = pts[np.arange(total), np.repeat(dims, lengths)]
            order = np.lexsort((chosen, np.repeat(np.arange(len(level)), lengths)))
            sorted_chosen = chosen[order]

            # Largest gap per cell (first position on ties).
            gap = sorted_chosen[1:] - sorted_chosen[:-1]
            valid = np.ones(total - 1, dtype=bool)
            valid[starts[1:] - 1] = False
            masked = np.where(valid, gap, -np.inf)
            seg_max = np.maximum.reduceat(masked, starts)
            is_max = masked == np.repeat(seg_max, lengths)[: total - 1]
            position = np.where(is_max, np.arange(total - 1), total)
            g = np.minimum.reduceat(position, starts)
            gap_values = 0.5 * (sorted_chosen[g] + sorted_chosen[g + 1])

            def segment_quantile(q: float) -> np.ndarray:
                pos = q * (lengths - 1)
                lo = np.floor(pos).astype(int)
                hi = np.minimum(lo + 1, lengths - 1)
                frac = pos - lo
                v_lo = sorted_chosen[starts + lo]
                v_hi = sorted_chosen[starts + hi]
                return v_lo + frac * (v_hi - v_lo)

            # Branch mean over the sorted values, matching _split_value's
            # summation order so fit and per-cell replay agree.
            dim_means = np.add.reduceat(sorted_chosen, starts) / lengths
            far_side = dim_means <= segment_quantile(_MEAN_Q)
            quantile_values = np.where(
                far_side, segment_quantile(_FAR_Q), segment_quantile(_NEAR_Q)
            )

            dim_width = sorted_chosen[starts + lengths - 1] - sorted_chosen[starts]
            sparse_gap = seg_max >= _max_gap_threshold(dim_width, lengths)
            values = np.where(sparse_gap, gap_values, quantile_values)

            below = chosen < np.repeat(values, lengths)
            n_lower = np.add.reduceat(below.astype(np.int64), starts)

            lo_edge = cell_boxes[np.arange(len(level)), dims, 0]
            hi_edge = cell_boxes[np.arange(len(level)), dims, 1]
            zero_range = ~ranges.any(axis=1)
            not_interior = ~((lo_edge < values) & (values < hi_edge))
            empty_child = (n_lower == 0) | (n_lower == lengths)

            next_level = []
            for c, (node, idx, box) in enumerate(level):
                if zero_range[c]:
                    reasons[node] = "zero-range"
                    continue
                if not_interior[c]:
                    reasons[node] = "not-interior"
                    continue
                if empty_child[c]:
                    reasons[node] = "empty-child"
                    continue
                dim = int(dims[c])
                value = float(values[c])
                seg = slice(starts[c], starts[c] + lengths[c])
                mask = below[seg]
                lower_idx = idx[mask]
                upper_idx = idx[~mask]
                lower_box = box.copy()
                lower_box[dim, 1] = value
                upper_box = box.copy()
                upper_box[dim, 0] = value
                split_dim[node] = dim
                split_value[node] = value
                left[node] = new_node(lower_idx.size, lower_box)
                right[node] = new_node(upper_idx.size, upper_box)
                if lower_idx.size > min_samples_split:
                    next_level.append((left[node], lower_idx, lower_box))
                if upper_idx.size > min_samples_split:
                    next_level.append((right[node], upper_idx, upper_box))
            level = next_level

        supports = np.stack(boxes)
        tree = cls(root_box, split_dim, split_value, left, right, counts, supports,
                   reasons, n, min_samples_split)
        tree._shrink_supports(data)
        return tree

    def _shrink_supports(self, data: np.ndarray):
        """Tighten each leaf's support to its points' padded bounding box.

        Leaves keep their partition cell as support when they hold fewer
        than two points or have zero extent in any dimension.
        """
        leaf_ids = self._descend(data)
        order = np.argsort(leaf_ids, kind="stable")
        sorted_ids = leaf_ids[order]
        starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
        pts = data[order]
        mins = np.minimum.reduceat(pts, starts, axis=0)
        maxs = np.maximum.reduceat(pts, starts, axis=0)
        for i, node in enumerate(sorted_ids[starts]):
            if self.counts[node] < 2:
                continue
            w = maxs[i] - mins[i]
            if not np.all(w > 0.0):
                continue
            pad = 0.5 * _BOX_PADDING * w
            self.supports[node, :, 0] = mins[i] - pad
            self.supports[node, :, 1] = maxs[i] + pad
        self.volumes = np.prod(self.supports[:, :, 1] - self.supports[:, :, 0], axis=1)
        leaf = self.split_dim < 0
        self._density = np.zeros(len(self.counts))
        self._density[leaf] = self.counts[leaf] / (self.n * self.volumes[leaf])

    def _descend(self, pts: np.ndarray) -> np.ndarray:
        """Leaf node id for each point (descent by partition geometry)."""
        node = np.zeros(pts.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.split_dim[node] >= 0)
        while active.size:
            sd = self.split_dim[node[active]]
            go_lower = pts[active, sd] < self.split_value[node[active]]
            node[active] = np.where(
                go_lower, self.left[node[active]], self.right[node[active]]
            )
            active = active[self.split_dim[node[active]] >= 0]
        return node

    def evaluate(self, rotated_x: np.ndarray) -> np.ndarray | float:
        """Density at rotated query points; 0 outside the leaf supports."""
        x = np.asarray(rotated_x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if not np.all(np.isfinite(pts)):
            raise DataError("evaluation requires finite coordinates")
        if pts.shape[1] != self.dim:
            raise ConfigError(f"query dimension {pts.shape[1]} != tree dimension {self.dim}")
        values = np.zeros(pts.shape[0])
        inside = np.all(
            (pts >= self.root_box[:, 0]) & (pts < self.root_box[:, 1]), axis=1
        )
        idx = np.flatnonzero(inside)
        if idx.size:
            leaves = self._descend(pts[idx])
            supported = np.all(
                (pts[idx] >= self.supports[leaves, :, 0])
                & (pts[idx] < self.supports[leaves, :, 1]),
                axis=1,
            )
            values[idx] = np.where(supported, self._density[leaves], 0.0)
        return float(values[0]) if single else values

    def leaf_boxes(self) -> list[tuple[int, np.ndarray]]:
        """(node_id, partition box) for every leaf, rebuilt by descent."""
        out = []
        stack = [(0, self.root_box.copy())]
        while stack:
            node, box = stack.pop()
            if self.split_dim[node] < 0:
                out.append((node, box))
                continue
            dim = self.split_dim[node]
            value = self.split_value[node]
            upper_box = box.copy()
            upper_box[dim, 0] = value
            lower_box = box.copy()
            lower_box[dim, 1] = value
            stack.append((int(self.right[node]), upper_box))
            stack.append((int(self.left[node]), lower_box))
        return out

    def leaf_supports(self) -> list[tuple[int, np.ndarray]]:
        """(node_id, support box) for every leaf."""
        return [
            (node, self.supports[node].copy())
            for node in np.flatnonzero(self.split_dim < 0)
        ]

    def total_mass(self) -> float:
        """Leaf-sum mass: sum over leaves of density * support volume."""
        leaf = self.split_dim < 0
        return float(np.sum(self._density[leaf] * self.volumes[leaf]))

    def to_json_dict(self) -> dict:
        nodes = []
        stack = [0]
        while stack:
            node = stack.pop()
            if self.split_dim[node] < 0:
                nodes.append(
                    {
                        "count": int(self.counts[node]),
                        "volume": float(self.volumes[node]),
                        "support": [[float(lo), float(hi)] for lo, hi in self.supports[node]],
                        "degenerate": self.reasons[node],
                    }
                )
            else:
                nodes.append(
                    {"dim": int(self.split_dim[node]), "value": float(self.split_value[node])}
                )
                stack.append(int(self.right[node]))
                stack.append(int(self.left[node]))
        return {
            "format": TREE_FORMAT,
            "n": self.n,
            "min_samples_split": self.min_samples_split,
            "root_box": [[float(lo), float(hi)] for lo, hi in self.root_box],
            "nodes": nodes,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AdaptiveTree":
        if obj.get("format") != TREE_FORMAT:
            raise ConfigError(f"unsupported tree model format {obj.get('format')!r}")
        root_box = np.asarray(obj["root_box"], dtype=float)
        split_dim: list[int] = []
        split_value: list[float] = []
        left: list[int] = []
        right: list[int] = []
        counts: list[int] = []
        supports: list[np.ndarray] = []
        reasons: list[str | None] = []
        # Pre-order rebuild: the next entry always fills the deepest
        # pending slot (lower child first).
        pending: list[tuple[np.ndarray, int, int]] = [(root_box, -1, 0)]
        for entry in obj["nodes"]:
            if not pending:
                raise ConfigError("malformed tree: more nodes than pre-order slots")
            box, parent, side = pending.pop()
            node = len(split_dim)
            if parent >= 0:
                (left if side == 0 else right)[parent] = node
            split_dim.append(-1)
            split_value.append(np.nan)
            left.append(-1)
            right.append(-1)
            counts.append(0)
            supports.append(box)
            reasons.append(None)
            if "dim" in entry:
                split_dim[node] = int(entry["dim"])
                split_value[node] = float(entry["value"])
                lower_box = box.copy()
                lower_box[split_dim[node], 1] = split_value[node]
                upper_box = box.copy()
                upper_box[split_dim[node], 0] = split_value[node]
                pending.append((upper_box, node, 1))
                pending.append((lower_box, node, 0))
            else:
                counts[node] = int(entry["count"])
                supports[node] = np.asarray(entry["support"], dtype=float)
                reasons[node] = entry.get("degenerate")
        if pending:
            raise ConfigError("malformed tree: pre-order list ended early")
        for node in range(len(split_dim) - 1, -1, -1):
            if split_dim[node] >= 0:
                counts[node] = counts[left[node]] + counts[right[node]]
        return cls(root_box, split_dim, split_value, left, right, counts,
                   np.stack(supports), reasons, int(obj["n"]),
                   int(obj["min_samples_split"]))


class RotatedTreeMember:
    """One ensemble member: rotate the query, evaluate the tree."""

    def __init__(self, rotation: np.ndarray, tree: AdaptiveTree):
        rotation = np.asarray(rotation, dtype=float)
        if rotation.shape != (tree.dim, tree.dim):
            raise ConfigError("rotation and tree dimensions disagree")
        self.rotation = rotation
        self.tree = tree

    @property
    def dim(self) -> int:
        return self.tree.dim

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        values = self.tree.evaluate(pts @ self.rotation.T)
        return float(values[0]) if single else values

    def to_json_dict(self) -> dict:
        return {
            "format": TREE_FORMAT,
            "rotation": [float(v) for v in self.rotation.ravel()],
            "tree": self.tree.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "RotatedTreeMember":
        tree = AdaptiveTree.from_json_dict(obj["tree"])
        rotation = np.asarray(obj["rotation"], dtype=float).reshape(tree.dim, tree.dim)
        return cls(rotation, tree)


def fit_adaptive(rotated_data: np.ndarray, min_samples_split: int) -> AdaptiveTree:
    """Grow an adaptive partition of already-rotated points."""
    return AdaptiveTree.fit(rotated_data, min_samples_split)


def fit_ahte(
    data: np.ndarray,
    T: int,
    min_samples_split: int,
    seed: rngmod.Seed,
) -> EnsembleModel:
    """Fit T rotation-only members, each an adaptive tree on its rotated cloud.

    Member t uses substream t of ``seed``, so refits with the same seed
    are identical regardless of fitting order.
    """
    if T < 1:
        raise ConfigError(f"ensemble size must be >= 1, got {T}")
    data = as_points(data)
    d = data.shape[1]
    members = []
    for stream in rngmod.member_streams(seed, T):
        rotation = sample_rotation(d, stream)
        tree = AdaptiveTree.fit(data @ rotation.T, min_samples_split)
        members.append(RotatedTreeMember(rotation, tree))
    return EnsembleModel(members)
