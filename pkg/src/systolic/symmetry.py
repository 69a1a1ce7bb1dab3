"""Automorphisms of the tesselated surface and orbit machinery.

An automorphism is a signed axis permutation of the cube: coordinates are
permuted (coordinate ``p`` moves to position ``perm[p-1]``) and then the
``flips`` vector is added mod 2.  It belongs to the surface group when it
maps realised squares to realised squares.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from systolic.surface import (
    Square,
    Systole,
    SurfaceModel,
    SurfaceParams,
    bit,
    build_surface,
    side_owner,
    square_at,
    systole_squares,
)


@dataclass(frozen=True, order=True)
class SignedAxisSymmetry:
    perm: tuple[int, ...]
    flips: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.perm)

    def on_vertex(self, v: int) -> int:
        w = 0
        for p in range(1, self.m + 1):
            w |= bit(v, p) << (self.perm[p - 1] - 1)
        for p, f in enumerate(self.flips, start=1):
            w ^= f << (p - 1)
        return w

    def on_square(self, q: Square) -> Square:
        image = sorted(self.on_vertex(v) for v in q.vertices(self.m))
        diff = image[0] ^ image[-1]
        i, j = [p for p in range(1, self.m + 1) if bit(diff, p)]
        return square_at(image[0], i, j, self.m)

    def compose(self, other: "SignedAxisSymmetry") -> "SignedAxisSymmetry":
        """``self after other``."""
        perm = tuple(self.perm[other.perm[p] - 1] for p in range(self.m))
        moved = [0] * self.m
        for p in range(1, self.m + 1):
            moved[self.perm[p - 1] - 1] = other.flips[p - 1]
        flips = tuple(a ^ b for a, b in zip(moved, self.flips))
        return SignedAxisSymmetry(perm, flips)

    def inverse(self) -> "SignedAxisSymmetry":
        inv = [0] * self.m
        for p, q in enumerate(self.perm, start=1):
            inv[q - 1] = p
        # g(v) = P v + f, so g^-1(w) = P^-1 w + P^-1 f
        flips = tuple(self.flips[q - 1] for q in self.perm)
        return SignedAxisSymmetry(tuple(inv), flips)

    def to_json(self) -> dict:
        return {"perm": list(self.perm), "flips": list(self.flips)}


def identity(m: int) -> SignedAxisSymmetry:
    return SignedAxisSymmetry(tuple(range(1, m + 1)), (0,) * m)


def preserves_realised_squares(g: SignedAxisSymmetry, model: SurfaceModel) -> bool:
    return all(g.on_square(q) in model.square_index for q in model.squares)


def automorphism_group(params: SurfaceParams | int, method: str = "fast") -> list[SignedAxisSymmetry]:
    """All signed axis permutations preserving the realised squares, sorted.

    ``method="filter"`` tests every one of the ``m! 2^m`` signed permutations
    against the square-preservation predicate; ``"fast"`` proposes dihedral
    axis permutations with arbitrary flips and verifies each.
    """
    m = params.m if isinstance(params, SurfaceParams) else SurfaceParams(params).m
    model = build_surface(m)
    all_flips = list(itertools.product((0, 1), repeat=m))
    if method == "filter":
        perms = list(itertools.permutations(range(1, m + 1)))
    elif method == "fast":
        base = list(range(1, m + 1))
        perms = []
        for r in range(m):
            rot = base[r:] + base[:r]
            perms.append(tuple(rot))
            perms.append(tuple(rot[::-1]))
    else:
        raise ValueError(method)
    group = []
    for perm in perms:
        # flips never change axes, so one flip pattern decides the whole coset
        probe = SignedAxisSymmetry(tuple(perm), (0,) * m)
        if not preserves_realised_squares(probe, model):
            continue
        for flips in all_flips:
            g = SignedAxisSymmetry(tuple(perm), flips)
            if method == "filter" and not preserves_realised_squares(g, model):
                continue
            group.append(g)
    return sorted(set(group))


def act(g: SignedAxisSymmetry, s: Systole, params: SurfaceParams | int) -> Systole:
    """Image of a systole, identified through its four realised squares."""
    m = params.m if isinstance(params, SurfaceParams) else SurfaceParams(params).m
    images = {g.on_square(q) for q in systole_squares(s, m)}
    model = build_surface(m)
    for j, squares in enumerate(model.systole_square_sets):
        if {model.squares[q] for q in squares} == images:
            return model.systoles[j]
    raise ValueError(f"{g} does not map {s.label} onto a systole")


def systole_permutation(g: SignedAxisSymmetry, model: SurfaceModel) -> np.ndarray:
    """Index permutation ``j -> index of g(systole j)``."""
    m = model.m
    out = np.empty(model.n, dtype=np.int64)
    for j, cycle in enumerate(model.systole_cycle):
        v, k = model.sides[cycle[0][1]]
        a = g.on_vertex(v)
        b = g.on_vertex(v ^ (1 << (k - 1)))
        k2 = g.perm[k - 1]
        out[j] = model.systole_index[side_owner(min(a, b), k2, m)]
    return out


@lru_cache(maxsize=None)
def group_table(m: int) -> np.ndarray:
    """``(|G|, n)`` array of systole permutations, rows in group order."""
    model = build_surface(m)
    return np.array([systole_permutation(g, model) for g in automorphism_group(m)])


def orbit(subset, perms: np.ndarray) -> set[tuple[int, ...]]:
    idx = np.asarray(sorted(subset), dtype=np.int64)
    if idx.size == 0:
        return {()}
    images = np.sort(perms[:, idx], axis=1)
    return {tuple(int(x) for x in row) for row in np.unique(images, axis=0)}


def canonical_form(subset, perms: np.ndarray) -> tuple[int, ...]:
    """Lexicographically least image of ``subset`` (sorted tuple) under ``perms``."""
    idx = np.asarray(sorted(subset), dtype=np.int64)
    if idx.size == 0:
        return ()
    images = np.sort(perms[:, idx], axis=1)
    order = np.lexsort(images.T[::-1])
    return tuple(int(x) for x in images[order[0]])


def axis_class(model: SurfaceModel, axis: int = 1) -> list[int]:
    return [j for j, s in enumerate(model.systoles) if s.axis == axis]


def setwise_stabilizer(perms: np.ndarray, members) -> np.ndarray:
    members = np.asarray(sorted(members))
    keep = [r for r in range(len(perms)) if set(perms[r, members].tolist()) == set(members.tolist())]
    return perms[keep]


def restrict(perms: np.ndarray, members) -> np.ndarray:
    """Rewrite permutations of a stabilised class on local indices ``0..len-1``, deduplicated."""
    members = list(sorted(members))
    local = {g: t for t, g in enumerate(members)}
    rows = np.array([[local[int(perms[r, g])] for g in members] for r in range(len(perms))])
    return np.unique(rows, axis=0)


def subset_orbit_representatives(local_perms: np.ndarray, max_size: int) -> list[tuple[int, ...]]:
    """Canonical representatives of all orbits of subsets of size ``<= max_size``.

    ``local_perms`` acts on ``0..k-1``.  Orbits of size ``s`` are generated by
    one-point extension of the size ``s - 1`` representatives and
    deduplicated by canonical form (canonical augmentation).
    """
    k = local_perms.shape[1]
    layer = [()]
    reps = [()]
    for _ in range(min(max_size, k)):
        nxt = set()
        for rep in layer:
            for e in range(k):
                if e not in rep:
                    nxt.add(canonical_form(rep + (e,), local_perms))
        layer = sorted(nxt)
        reps.extend(layer)
    return reps


def orbit_count_burnside(local_perms: np.ndarray, max_size: int) -> int:
    """Independent count of subset orbits by Burnside's lemma."""
    total = 0
    for row in local_perms:
        seen = np.zeros(len(row), dtype=bool)
        lengths = []
        for start in range(len(row)):
            if seen[start]:
                continue
            ln, x = 0, start
            while not seen[x]:
                seen[x] = True
                x = row[x]
                ln += 1
            lengths.append(ln)
        # generating function prod (1 + z^len): fixed subsets by size
        poly = [1]
        for ln in lengths:
            new = [0] * (len(poly) + ln)
            for d, c in enumerate(poly):
                new[d] += c
                new[d + ln] += c
            poly = new
        total += sum(poly[: max_size + 1])
    assert total % len(local_perms) == 0
    return total // len(local_perms)
