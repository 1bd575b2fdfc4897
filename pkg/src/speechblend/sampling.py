"""Seeded index splits shared by the harness and the blending stage."""

from __future__ import annotations

import numpy as np

from .errors import BadParam


def _held_count(n: int, fraction: float) -> int:
    # round half up so a 0.25 share of 30 rows holds out 8, not 7
    return int(np.floor(n * fraction + 0.5))


def stratified_split_indices(
    y, held_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Partition row indices into (main, held) with per-class proportions.

    Each class contributes round(count * held_fraction) rows to the held
    part. Both outputs are sorted ascending; together they cover every index
    exactly once. Deterministic for a given seed.
    """
    labels = np.asarray(y)
    if labels.ndim != 1 or len(labels) == 0:
        raise BadParam("labels must be a non-empty 1-D array")
    if not 0.0 < held_fraction < 1.0:
        raise BadParam("held_fraction must be strictly between 0 and 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    held_parts = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        take = _held_count(len(members), held_fraction)
        perm = rng.permutation(len(members))
        held_parts.append(members[perm[:take]])
    held = np.sort(np.concatenate(held_parts))
    mask = np.ones(len(labels), dtype=bool)
    mask[held] = False
    return np.flatnonzero(mask), held


def shuffle_split_indices(
    n: int, held_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Unstratified variant of :func:`stratified_split_indices`."""
    if n < 1:
        raise BadParam("need at least one row")
    if not 0.0 < held_fraction < 1.0:
        raise BadParam("held_fraction must be strictly between 0 and 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    take = _held_count(n, held_fraction)
    held = np.sort(perm[:take])
    mask = np.ones(n, dtype=bool)
    mask[held] = False
    return np.flatnonzero(mask), held
