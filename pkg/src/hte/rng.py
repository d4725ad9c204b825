"""Seed bookkeeping for reproducible ensembles.

One root seed governs a whole experiment.  Replications get seeds
``root_seed + replication_index``; within a fitted ensemble, member t
draws from an independent substream derived from the (seed, t) pair, so
results do not depend on the order in which members are fitted.
"""

from __future__ import annotations

import numpy as np

Seed = int | np.random.SeedSequence


def as_seed_sequence(seed: Seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def subseed(seed: Seed, *key: int) -> np.random.SeedSequence:
    """Seed for the substream identified by ``key`` under ``seed``.

    The same (seed, key) pair always yields the same stream, and streams
    with different keys are statistically independent.
    """
    root = as_seed_sequence(seed)
    return np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + tuple(key))


def substream(seed: Seed, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``key`` under ``seed``."""
    return np.random.default_rng(subseed(seed, *key))


def member_streams(seed: Seed, count: int) -> list[np.random.Generator]:
    """Independent per-member generators, keyed by member index."""
    return [substream(seed, t) for t in range(count)]


def replication_seed(root_seed: int, replication: int) -> int:
    return int(root_seed) + int(replication)
