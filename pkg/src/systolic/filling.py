"""Complementary regions, filling and minimality of systole subsets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from systolic.homology import CombinatorialMap
from systolic.surface import SurfaceModel, flip


@dataclass(frozen=True)
class Region:
    faces: tuple[int, ...]
    euler: int
    boundary_walks: int

    @property
    def is_disk(self) -> bool:
        return self.euler == 1 and self.boundary_walks == 1


@dataclass(frozen=True)
class CutComplex:
    """Decomposition of the surface cut along a set of systoles.

    ``crossings`` counts pairwise intersections inside the subset.
    """

    subset: tuple[int, ...]
    regions: tuple[Region, ...]
    crossings: int

    @property
    def euler_total(self) -> int:
        return sum(r.euler for r in self.regions)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            if b < a:
                a, b = b, a
            self.parent[b] = a


def cut_sides(cmap: CombinatorialMap, subset) -> np.ndarray:
    """Boolean mask over sides lying on a chosen systole."""
    chosen = np.zeros(cmap.model.n, dtype=bool)
    chosen[list(subset)] = True
    return chosen[cmap.model.side_systole]


def cut_face_next(cmap: CombinatorialMap, cut: np.ndarray, d: int) -> int:
    """Next boundary dart after ``d`` on the boundary walk of its region."""
    nxt = int(cmap.face_next[d])
    while not cut[cmap.dart_side[nxt]]:
        nxt = int(cmap.face_next[cmap.opposite[nxt]])
    return nxt


def complementary_regions(subset, cmap: CombinatorialMap) -> CutComplex:
    model = cmap.model
    subset = tuple(sorted(set(int(j) for j in subset)))
    cut = cut_sides(cmap, subset)
    nf = 2 ** model.m
    uf = _UnionFind(nf)
    for e, (v, k) in enumerate(model.sides):
        if not cut[e]:
            uf.union(v, v ^ (1 << (k - 1)))
    roots = sorted({uf.find(v) for v in range(nf)})
    rid = {r: t for t, r in enumerate(roots)}
    faces = [[] for _ in roots]
    for v in range(nf):
        faces[rid[uf.find(v)]].append(v)
    euler = [len(f) for f in faces]
    for e, (v, _) in enumerate(model.sides):
        if not cut[e]:
            euler[rid[uf.find(v)]] -= 1
    chosen = set(subset)
    on_curve = [a in chosen or b in chosen for a, b in model.square_to_systoles]
    # an uncut corner of face v lies inside v's region
    seen = set()
    for d in range(cmap.n_darts):
        q = int(cmap.dart_corner[d])
        if not on_curve[q] and q not in seen:
            seen.add(q)
            euler[rid[uf.find(cmap.dart_face(d))]] += 1
    walks = [0] * len(roots)
    visited = np.zeros(cmap.n_darts, dtype=bool)
    for d in range(cmap.n_darts):
        if visited[d] or not cut[cmap.dart_side[d]]:
            continue
        walks[rid[uf.find(cmap.dart_face(d))]] += 1
        x = d
        while not visited[x]:
            visited[x] = True
            x = cut_face_next(cmap, cut, x)
    crossings = sum(1 for a, b in model.square_to_systoles if a in chosen and b in chosen)
    regions = tuple(Region(tuple(f), e, w) for f, e, w in zip(faces, euler, walks))
    return CutComplex(subset, regions, crossings)


class RegionCounter:
    """Fast filling test through the region count identity.

    For a nonempty subset with ``V`` pairwise crossings the regions satisfy
    ``#regions >= 2 - 2g + V`` with equality exactly when every region is a
    disk, so only connected components of the face graph are needed.
    """

    def __init__(self, model: SurfaceModel):
        self.model = model
        self.n_faces = 2 ** model.m
        self.tail = np.array([v for v, _ in model.sides], dtype=np.int64)
        self.head = np.array([flip(v, k) for v, k in model.sides], dtype=np.int64)
        self.owner = np.asarray(model.side_systole)
        self.pairs = np.asarray(model.square_to_systoles)
        self.target = 2 - 2 * model.genus

    def mask(self, subset) -> np.ndarray:
        x = np.zeros(self.model.n, dtype=bool)
        x[list(subset)] = True
        return x

    def labels(self, x: np.ndarray) -> tuple[int, np.ndarray]:
        keep = ~x[self.owner]
        g = coo_matrix((np.ones(int(keep.sum())), (self.tail[keep], self.head[keep])),
                       shape=(self.n_faces, self.n_faces))
        return connected_components(g, directed=False)

    def crossings(self, x: np.ndarray) -> int:
        return int((x[self.pairs[:, 0]] & x[self.pairs[:, 1]]).sum())

    def fills(self, x: np.ndarray) -> bool:
        if not x.any():
            return False
        return self.labels(x)[0] == self.target + self.crossings(x)

    def removable(self, x: np.ndarray) -> list[int]:
        """Curves of a filling mask whose removal keeps it filling."""
        out = []
        for c in np.flatnonzero(x):
            x[c] = False
            if self.fills(x):
                out.append(int(c))
            x[c] = True
        return out

    def is_minimal(self, x: np.ndarray) -> bool:
        return self.fills(x) and not self.removable(x.copy())


def is_filling(subset, cmap: CombinatorialMap) -> bool:
    if not len(subset):
        return False
    return all(r.is_disk for r in complementary_regions(subset, cmap).regions)


def is_minimal_filling(subset, cmap: CombinatorialMap) -> bool:
    subset = sorted(set(subset))
    if not is_filling(subset, cmap):
        return False
    return not any(is_filling([j for j in subset if j != c], cmap) for c in subset)


def shrink_to_minimal(subset, cmap: CombinatorialMap) -> list[int]:
    """Drop curves (highest index first) while the set keeps filling."""
    current = sorted(set(subset))
    changed = True
    while changed:
        changed = False
        for c in reversed(current):
            trial = [j for j in current if j != c]
            if is_filling(trial, cmap):
                current = trial
                changed = True
                break
    return current


def bound_check_2g(subset, cmap: CombinatorialMap) -> bool:
    """Check ``|subset| <= 2g`` for a one-region minimal filling set."""
    cx = complementary_regions(subset, cmap)
    if len(cx.regions) != 1 or not cx.regions[0].is_disk:
        raise ValueError("bound applies to filling sets with a single complementary region")
    if len(cx.subset) > 2 * cmap.model.genus:
        raise AssertionError(f"{len(cx.subset)} curves exceed 2g = {2 * cmap.model.genus}")
    return True


def intersection_quadratic(subset, A: np.ndarray) -> int:
    """Quadratic-program form of the intersection count, ``sum_{i>=j} a_ij x_i x_j``."""
    x = np.zeros(A.shape[0], dtype=np.int64)
    x[list(subset)] = 1
    return int(x @ np.tril(A.astype(np.int64)) @ x)
