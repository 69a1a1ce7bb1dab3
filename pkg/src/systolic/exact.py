"""Exact rank over the rationals for sparse integer vectors."""

from __future__ import annotations

from math import gcd


def _normalise(vec: dict[int, int]) -> dict[int, int]:
    g = 0
    for x in vec.values():
        g = gcd(g, x)
        if g == 1:
            return vec
    if g > 1:
        vec = {k: x // g for k, x in vec.items()}
    return vec


class RationalEchelon:
    """Incremental row echelon form with fraction-free integer updates.

    Vectors are sparse dicts ``{coordinate: int}``.  Each stored pivot vector
    has a distinct leading (smallest) coordinate.  Elimination uses the
    Bareiss-style cross multiplication ``a * v - b * p`` followed by content
    removal, so entries stay integral and small.
    """

    def __init__(self):
        self.pivots: dict[int, dict[int, int]] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, vec: dict[int, int]) -> dict[int, int]:
        vec = {k: x for k, x in vec.items() if x}
        while vec:
            lead = min(vec)
            piv = self.pivots.get(lead)
            if piv is None:
                return vec
            a, b = piv[lead], vec[lead]
            out = {k: a * x for k, x in vec.items()}
            for k, x in piv.items():
                y = out.get(k, 0) - b * x
                if y:
                    out[k] = y
                else:
                    out.pop(k, None)
            vec = _normalise(out)
        return vec

    def add(self, vec: dict[int, int]) -> bool:
        """Insert ``vec``; return True if it raised the rank."""
        red = self.reduce(vec)
        if not red:
            return False
        red = _normalise(red)
        if red[min(red)] < 0:
            red = {k: -x for k, x in red.items()}
        self.pivots[min(red)] = red
        return True


def rank_of(vectors) -> int:
    ech = RationalEchelon()
    for v in vectors:
        ech.add(v)
    return ech.rank


def dense_rank(rows) -> int:
    """Rank of a dense integer matrix given as a list of rows."""
    return rank_of({j: int(x) for j, x in enumerate(r) if x} for r in rows)
