"""Oriented combinatorial map of the tesselation and rational homology.

Cells: tesselation vertices are realised squares, edges are sides (cube
edges), faces are m-gons (cube vertices).  A dart ``(v, k)`` is side ``k`` of
face ``v``; its id is ``v * m + k - 1``.  Each side carries a reference
orientation running from the square with axes ``{k-1, k}`` to the square with
axes ``{k, k+1}``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from systolic.exact import RationalEchelon
from systolic.surface import SurfaceModel, bit, cyc, flip, square_at


class OrientationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CombinatorialMap:
    model: SurfaceModel
    face_flag: np.ndarray  # +1: sides in order 1..m, -1: reversed
    face_next: np.ndarray  # dart -> next dart around its face
    opposite: np.ndarray  # dart -> same side seen from the other face
    dart_side: np.ndarray
    dart_sign: np.ndarray  # +1 if the face traverses the side along its reference orientation
    dart_corner: np.ndarray  # square at the head of the dart
    side_tail: np.ndarray
    side_head: np.ndarray

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def n_darts(self) -> int:
        return len(self.face_next)

    def dart(self, v: int, k: int) -> int:
        return v * self.m + k - 1

    def dart_face(self, d) -> int:
        return d // self.m

    def dart_dir(self, d) -> int:
        return d % self.m + 1

    @cached_property
    def vertex_rotation(self) -> np.ndarray:
        """Dart -> next dart (counterclockwise) among the darts ending at the same corner."""
        return self.opposite[self.face_next]

    def faces(self) -> list[list[int]]:
        out = []
        for v in range(2 ** self.m):
            d = self.dart(v, 1)
            walk = [d]
            while (d := int(self.face_next[d])) != walk[0]:
                walk.append(d)
            out.append(walk)
        return out

    def euler_characteristic(self) -> int:
        return len(self.model.squares) - len(self.model.sides) + 2 ** self.m

    @cached_property
    def boundary2(self) -> list[dict[int, int]]:
        """Columns of the face boundary map, one sparse dict per face."""
        cols = []
        for v in range(2 ** self.m):
            col: dict[int, int] = {}
            for k in range(1, self.m + 1):
                d = self.dart(v, k)
                col[int(self.dart_side[d])] = int(self.dart_sign[d])
            cols.append(col)
        return cols

    @cached_property
    def boundary1(self) -> list[dict[int, int]]:
        return [{int(h): 1, int(t): -1} for t, h in zip(self.side_tail, self.side_head)]


def build_combinatorial_map(model: SurfaceModel) -> CombinatorialMap:
    m = model.m
    nf = 2 ** m
    flag = np.zeros(nf, dtype=np.int8)
    flag[0] = 1
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for k in range(1, m + 1):
            w = flip(v, k)
            want = -flag[v]
            if flag[w] == 0:
                flag[w] = want
                queue.append(w)
            elif flag[w] != want:
                raise OrientationError(f"faces {v} and {w} disagree across side {k}")

    nd = nf * m
    face_next = np.empty(nd, dtype=np.int64)
    opposite = np.empty(nd, dtype=np.int64)
    dart_side = np.empty(nd, dtype=np.int64)
    dart_corner = np.empty(nd, dtype=np.int64)
    for v in range(nf):
        for k in range(1, m + 1):
            d = v * m + k - 1
            k2 = cyc(k + int(flag[v]), m)
            face_next[d] = v * m + k2 - 1
            opposite[d] = flip(v, k) * m + k - 1
            lower = v if not bit(v, k) else flip(v, k)
            dart_side[d] = model.side_index[(lower, k)]
            dart_corner[d] = model.square_index[square_at(v, k, k2, m)]
    dart_sign = np.repeat(flag.astype(np.int64), m)

    tails = np.empty(len(model.sides), dtype=np.int64)
    heads = np.empty(len(model.sides), dtype=np.int64)
    for j, (v, k) in enumerate(model.sides):
        tails[j] = model.square_index[square_at(v, cyc(k - 1, m), k, m)]
        heads[j] = model.square_index[square_at(v, k, cyc(k + 1, m), m)]

    cmap = CombinatorialMap(model, flag, face_next, opposite, dart_side, dart_sign,
                            dart_corner, tails, heads)
    # the head corner of a dart is the tail corner of the next dart in the face
    if not np.array_equal(np.where(dart_sign > 0, heads[dart_side], tails[dart_side]), dart_corner):
        raise OrientationError("face walks do not close on the side orientation")
    return cmap


def systole_cycle_vector(j: int, cmap: CombinatorialMap, reverse: bool = False) -> dict[int, int]:
    """Signed 1-chain of systole ``j`` (sparse over sides)."""
    cycle = cmap.model.systole_cycle[j]
    vec = {}
    for q, e in cycle:
        sign = 1 if cmap.side_tail[e] == q else -1
        vec[e] = -sign if reverse else sign
    return vec


def apply_boundary1(cmap: CombinatorialMap, chain: dict[int, int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for e, c in chain.items():
        out[int(cmap.side_head[e])] = out.get(int(cmap.side_head[e]), 0) + c
        out[int(cmap.side_tail[e])] = out.get(int(cmap.side_tail[e]), 0) - c
    return {k: v for k, v in out.items() if v}


def homology_span_rank(systole_set, cmap: CombinatorialMap) -> int:
    """Dimension of the span of the given systoles in H_1(S; Q)."""
    ech = RationalEchelon()
    for col in cmap.boundary2:
        ech.add(col)
    base = ech.rank
    for j in sorted(systole_set):
        ech.add(systole_cycle_vector(j, cmap))
    return ech.rank - base


def first_betti(cmap: CombinatorialMap) -> int:
    """``dim ker d1 - rank d2`` computed exactly."""
    r1 = RationalEchelon()
    for col in cmap.boundary1:
        r1.add(col)
    r2 = RationalEchelon()
    for col in cmap.boundary2:
        r2.add(col)
    return len(cmap.model.sides) - r1.rank - r2.rank


def triplets(columns: list[dict[int, int]]) -> str:
    """``row col value`` lines for an exported sparse matrix."""
    lines = []
    for c, col in enumerate(columns):
        for r in sorted(col):
            lines.append(f"{r} {c} {col[r]}")
    return "\n".join(lines) + "\n"
