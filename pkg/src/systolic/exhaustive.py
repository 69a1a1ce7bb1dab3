"""Brute-force filling oracle over every subset of systoles (small m only).

Uses the region count identity: a nonempty subset fills exactly when the
number of complementary regions equals ``2 - 2g + crossings``.  Regions are
found by min-label propagation across uncut sides, vectorised over all
``2^n`` subsets at once.
"""

from __future__ import annotations

import numpy as np

from systolic.surface import SurfaceModel, flip


def subset_masks(n: int) -> np.ndarray:
    return np.arange(2 ** n, dtype=np.int64)


def filling_table(model: SurfaceModel, max_systoles: int = 24) -> np.ndarray:
    """Boolean array ``F`` with ``F[mask]`` true iff the subset ``mask`` fills."""
    n = model.n
    if n > max_systoles:
        raise ValueError(f"{2 ** n} subsets is too many for the exhaustive oracle")
    nf = 2 ** model.m
    dtype = np.int8 if nf <= 127 else np.int16
    masks = subset_masks(n)
    labels = np.tile(np.arange(nf, dtype=dtype), (len(masks), 1))
    owner = model.side_systole
    uncut = [((masks >> int(owner[e])) & 1) == 0 for e in range(len(model.sides))]
    ends = [(v, flip(v, k)) for v, k in model.sides]
    changed = True
    while changed:
        changed = False
        for e, (a, b) in enumerate(ends):
            la, lb = labels[:, a], labels[:, b]
            low = np.minimum(la, lb)
            upd = uncut[e] & (low != np.maximum(la, lb))
            if upd.any():
                changed = True
                labels[upd, a] = low[upd]
                labels[upd, b] = low[upd]
        # pointer jump: label <- label of label
        jumped = np.take_along_axis(labels, labels.astype(np.int64), axis=1)
        if not np.array_equal(jumped, labels):
            labels = jumped
            changed = True
    regions = (labels == np.arange(nf, dtype=dtype)).sum(axis=1)
    crossings = np.zeros(len(masks), dtype=np.int64)
    for a, b in model.square_to_systoles:
        crossings += ((masks >> a) & 1) & ((masks >> b) & 1)
    return (regions == 2 - 2 * model.genus + crossings) & (masks != 0)


def minimal_table(filling: np.ndarray, n: int) -> np.ndarray:
    masks = subset_masks(n)
    minimal = filling.copy()
    for c in range(n):
        has = ((masks >> c) & 1).astype(bool)
        minimal &= ~(has & filling[masks ^ (1 << c)])
    return minimal


def mask_to_subset(mask: int) -> tuple[int, ...]:
    return tuple(j for j in range(int(mask).bit_length()) if (int(mask) >> j) & 1)


def popcounts(n: int) -> np.ndarray:
    masks = subset_masks(n)
    out = np.zeros(len(masks), dtype=np.int64)
    for c in range(n):
        out += (masks >> c) & 1
    return out
