"""Combinatorial model of the surface tesselated by right-angled m-gons.

The dual graph of the tesselation is the 1-skeleton of the m-cube.  Cube
vertices are m-gons, cube edges are the sides shared by two m-gons, and the
realised squares (4-cycles with cyclically adjacent axes) are the vertices of
the tesselation.  Systoles run along sides and are labelled ``{i, (a_1..a_k)}``
with ``k = m - 3``: all four sides point in direction ``i``, the coordinates
``i - 1`` and ``i + 1`` vary, and ``a`` lists the remaining coordinates in
cyclic order starting at ``i + 2``.

Positions are 1-based.  Internally a cube vertex is an int whose bit
``p - 1`` holds coordinate ``p``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class DomainError(ValueError):
    """Raised for parameters outside the hyperbolic range."""


@dataclass(frozen=True, order=True)
class SurfaceParams:
    m: int

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 5:
            raise DomainError(
                f"m={self.m}: need m >= 5 (right-angled m-gons are hyperbolic "
                "only for m >= 5; m = 3, 4 give the sphere and torus)"
            )


@dataclass(frozen=True, order=True)
class Square:
    axes: tuple[int, int]
    rest: tuple[int, ...]

    def vertices(self, m: int) -> list[int]:
        i, j = self.axes
        base = 0
        others = [p for p in range(1, m + 1) if p not in (i, j)]
        for p, b in zip(others, self.rest):
            base |= b << (p - 1)
        return sorted(base | (a << (i - 1)) | (b << (j - 1)) for a in (0, 1) for b in (0, 1))

    def is_realised(self, m: int) -> bool:
        i, j = self.axes
        return j - i == 1 or (i, j) == (1, m)

    def __str__(self):
        return f"{{{self.axes}, {self.rest}}}"


@dataclass(frozen=True, order=True)
class Systole:
    axis: int
    tuple: tuple[int, ...]

    @property
    def label(self) -> str:
        return f"{self.axis}:(" + ",".join(str(b) for b in self.tuple) + ")"

    def __str__(self):
        return self.label


_LABEL_RE = re.compile(r"^\s*(\d+)\s*:\s*\(([\d,\s]*)\)\s*$")


def parse_label(text: str, m: int | None = None) -> Systole:
    """Parse ``"i:(a1,...,ak)"``."""
    match = _LABEL_RE.match(text)
    if match is None:
        raise ValueError(f"bad systole label {text!r}")
    bits = tuple(int(b) for b in match.group(2).split(",") if b.strip())
    s = Systole(int(match.group(1)), bits)
    if m is not None:
        _check_label(s, m)
    return s


def _check_label(s: Systole, m: int) -> None:
    if not 1 <= s.axis <= m or len(s.tuple) != m - 3 or any(b not in (0, 1) for b in s.tuple):
        raise ValueError(f"{s.label} is not a systole label for m={m}")


def cyc(p: int, m: int) -> int:
    """Reduce a position to the range 1..m."""
    return (p - 1) % m + 1


def bit(v: int, p: int) -> int:
    return (v >> (p - 1)) & 1


def flip(v: int, p: int) -> int:
    return v ^ (1 << (p - 1))


def parity(v: int) -> int:
    return bin(v).count("1") & 1


def vertex_tuple(v: int, m: int) -> tuple[int, ...]:
    return tuple(bit(v, p) for p in range(1, m + 1))


def fixed_positions(axis: int, m: int) -> list[int]:
    """Positions frozen by a systole of the given axis, in label order."""
    return [cyc(axis + d, m) for d in range(2, m - 1)]


def square_at(v: int, p: int, q: int, m: int) -> Square:
    i, j = min(p, q), max(p, q)
    rest = tuple(bit(v, r) for r in range(1, m + 1) if r not in (i, j))
    return Square((i, j), rest)


def side_owner(v: int, k: int, m: int) -> Systole:
    """Systole running along the side dual to the cube edge ``(v, v + e_k)``."""
    return Systole(k, tuple(bit(v, p) for p in fixed_positions(k, m)))


@dataclass(frozen=True)
class SurfaceModel:
    """The tesselated surface for one value of m.

    ``sides`` lists cube edges as ``(lower vertex, direction)`` sorted by
    ``(direction, lower vertex)``.  ``systole_cycle[j]`` is the cyclic
    sequence ``((square, side), ...)`` of systole ``j`` where ``side`` joins
    ``square`` to the next square of the cycle.
    """

    params: SurfaceParams
    systoles: tuple[Systole, ...]
    squares: tuple[Square, ...]
    sides: tuple[tuple[int, int], ...]
    square_to_systoles: tuple[tuple[int, int], ...]
    systole_cycle: tuple[tuple[tuple[int, int], ...], ...]
    genus: int
    systole_index: dict = field(repr=False, compare=False)
    square_index: dict = field(repr=False, compare=False)
    side_index: dict = field(repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def n(self) -> int:
        return len(self.systoles)

    @cached_property
    def side_systole(self) -> np.ndarray:
        """Owning systole index for every side."""
        return np.array([self.systole_index[side_owner(v, k, self.m)] for v, k in self.sides])

    @cached_property
    def systole_sides(self) -> np.ndarray:
        """``(n, 4)`` side indices in cycle order."""
        return np.array([[e for _, e in cyc_] for cyc_ in self.systole_cycle])

    @cached_property
    def systole_square_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(q for q, _ in cyc_) for cyc_ in self.systole_cycle)

    @cached_property
    def adjacency(self) -> np.ndarray:
        return incidence_matrices(self)[0]

    @cached_property
    def neighbours(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in self.adjacency)

    def to_json(self) -> str:
        data = {
            "m": self.m,
            "systoles": [{"axis": s.axis, "tuple": list(s.tuple)} for s in self.systoles],
            "genus": self.genus,
        }
        return json.dumps(data, sort_keys=True)

    def labels(self, subset) -> list[str]:
        return [self.systoles[j].label for j in sorted(subset)]

    def indices(self, labels) -> list[int]:
        return sorted(self.systole_index[parse_label(t, self.m)] for t in labels)


def genus_of(m: int) -> int:
    return 1 + (m - 4) * 2 ** (m - 3)


def min_intersections(params: SurfaceParams | int) -> int:
    """Euler-characteristic lower bound on the intersections of a filling set."""
    m = params.m if isinstance(params, SurfaceParams) else SurfaceParams(params).m
    return 1 - 2 ** (m - 2) * (4 - m)


def _systole_walk(s: Systole, m: int) -> list[tuple[Square, tuple[int, int]]]:
    i = s.axis
    lo, hi = cyc(i - 1, m), cyc(i + 1, m)
    v0 = 0
    for p, b in zip(fixed_positions(i, m), s.tuple):
        v0 |= b << (p - 1)
    bases = [v0, flip(v0, hi), flip(flip(v0, hi), lo), flip(v0, lo)]
    # the square between consecutive sides: axes {i, hi} then {lo, i}, alternating
    walk = []
    for t, v in enumerate(bases):
        other = hi if t % 2 == 0 else lo
        walk.append((square_at(v, i, other, m), (v, i)))
    # walk[t] = (square after side t, side t); rotate into (square, outgoing side)
    return [(walk[t - 1][0], walk[t][1]) for t in range(4)]


def systole_squares(s: Systole, params: SurfaceParams | int) -> set[Square]:
    """The four realised squares a systole passes through."""
    m = params.m if isinstance(params, SurfaceParams) else SurfaceParams(params).m
    _check_label(s, m)
    return {q for q, _ in _systole_walk(s, m)}


def intersects(s1: Systole, s2: Systole, params: SurfaceParams | int) -> bool:
    """Combinatorial intersection rule on labels."""
    m = params.m if isinstance(params, SurfaceParams) else SurfaceParams(params).m
    _check_label(s1, m)
    _check_label(s2, m)
    if cyc(s1.axis + 1, m) == s2.axis:
        lower, upper = s1, s2
    elif cyc(s2.axis + 1, m) == s1.axis:
        lower, upper = s2, s1
    else:
        return False
    return lower.tuple[1:] == upper.tuple[:-1]


def build_surface(params: SurfaceParams | int) -> SurfaceModel:
    if not isinstance(params, SurfaceParams):
        params = SurfaceParams(params)
    m = params.m
    k = m - 3
    systoles = tuple(
        Systole(i, tuple((t >> (k - 1 - r)) & 1 for r in range(k)))
        for i in range(1, m + 1)
        for t in range(2 ** k)
    )
    squares = []
    for i in range(1, m + 1):
        j = cyc(i + 1, m)
        a, b = min(i, j), max(i, j)
        for t in range(2 ** (m - 2)):
            squares.append(Square((a, b), tuple((t >> (m - 3 - r)) & 1 for r in range(m - 2))))
    squares = tuple(sorted(squares))
    sides = tuple(sorted(((v, d) for d in range(1, m + 1) for v in range(2 ** m) if not bit(v, d)),
                         key=lambda e: (e[1], e[0])))
    systole_index = {s: j for j, s in enumerate(systoles)}
    square_index = {q: j for j, q in enumerate(squares)}
    side_index = {e: j for j, e in enumerate(sides)}

    cycles = []
    members: list[list[int]] = [[] for _ in squares]
    for j, s in enumerate(systoles):
        walk = [(square_index[q], side_index[e]) for q, e in _systole_walk(s, m)]
        # start at the least square, head toward the lesser neighbouring square
        start = min(range(4), key=lambda t: walk[t][0])
        forward = [walk[(start + t) % 4] for t in range(4)]
        nxt, prv = walk[(start + 1) % 4][0], walk[(start - 1) % 4][0]
        if prv < nxt:
            # reverse: squares go start, start-1, ...; side between q_t and q_{t-1} is walk[t-1]
            sq = [walk[(start - t) % 4][0] for t in range(4)]
            sd = [walk[(start - t - 1) % 4][1] for t in range(4)]
            forward = list(zip(sq, sd))
        cycles.append(tuple(forward))
        for q, _ in forward:
            members[q].append(j)
    square_to_systoles = tuple(tuple(sorted(p)) for p in members)
    return SurfaceModel(
        params=params,
        systoles=systoles,
        squares=squares,
        sides=sides,
        square_to_systoles=square_to_systoles,
        systole_cycle=tuple(cycles),
        genus=genus_of(m),
        systole_index=systole_index,
        square_index=square_index,
        side_index=side_index,
    )


def incidence_matrices(model: SurfaceModel) -> tuple[np.ndarray, np.ndarray]:
    """Intersection matrix ``A`` (n x n) and square incidence ``N`` (2n x n)."""
    n = model.n
    A = np.zeros((n, n), dtype=np.int8)
    N = np.zeros((len(model.squares), n), dtype=np.int8)
    for q, (a, b) in enumerate(model.square_to_systoles):
        A[a, b] = A[b, a] = 1
        N[q, a] = N[q, b] = 1
    return A, N


def intersection_count(model: SurfaceModel, subset) -> int:
    """Number of realised squares whose two systoles both lie in ``subset``."""
    chosen = set(subset)
    return sum(1 for a, b in model.square_to_systoles if a in chosen and b in chosen)


def to_dot(model: SurfaceModel) -> str:
    lines = [f"graph intersections_m{model.m} {{"]
    for s in model.systoles:
        lines.append(f'  "{s.label}";')
    for a, b in model.square_to_systoles:
        lines.append(f'  "{model.systoles[a].label}" -- "{model.systoles[b].label}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
