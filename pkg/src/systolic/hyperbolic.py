"""Fundamental polygon chart, systole length functions and the Morse index.

Cutting the surface along a minimal filling set with one complementary
region gives a polygon whose sides are arcs of the chosen curves and whose
corners are their crossings.  A point of the chart is a perturbation of that
polygon: one length offset per pair of glued sides and one angle offset per
crossing.  Three of the length offsets are slaved to the others by closure
of the boundary walk, which leaves ``3M - 3 = 6g - 6`` coordinates.

Matrices act on the upper half plane as Mobius maps.  A frame is an
isometry taking the base frame (point ``i``, pointing up the imaginary axis)
to the current position and heading.  Walking along the boundary moves the
frame by ``T(L)`` along a side and turns it left by ``R(pi - alpha)`` at a
corner of interior angle ``alpha``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog, minimize

from systolic.filling import complementary_regions, cut_face_next, cut_sides
from systolic.homology import CombinatorialMap
from systolic.surface import SurfaceModel, cyc, flip, parity


class ClosureError(RuntimeError):
    pass


class RankError(RuntimeError):
    """No clean gap in the singular values."""

    def __init__(self, message, spectrum):
        super().__init__(message)
        self.spectrum = spectrum


PI_EXTENDED = np.longdouble("3.14159265358979323846264338327950288")


def pi_of(dtype) -> np.floating:
    return PI_EXTENDED if dtype == np.longdouble else np.float64(math.pi)


def precision_for(m: int) -> type:
    """Double precision up to m = 5; beyond that the polygon has too many
    sides for closure to hold to 1e-12 in double, so extended precision is used."""
    return np.float64 if m <= 5 else np.longdouble


def side_length(m: int, dtype=np.float64):
    """Side of the regular right-angled m-gon: ``cosh(s/2) = sqrt(2) cos(pi/m)``."""
    if dtype == np.float64:
        return 2.0 * math.acosh(math.sqrt(2.0) * math.cos(math.pi / m))
    two = dtype(2)
    return two * np.arccosh(np.sqrt(two) * np.cos(pi_of(dtype) / dtype(m)))


def translation(length, dtype=np.float64) -> np.ndarray:
    h = dtype(length) / 2
    return np.array([[np.exp(h), 0], [0, np.exp(-h)]], dtype=dtype)


def rotation(angle, dtype=np.float64) -> np.ndarray:
    """Counterclockwise rotation about ``i``."""
    half = dtype(angle) / 2
    c, s = np.cos(half), np.sin(half)
    return np.array([[c, s], [-s, c]], dtype=dtype)


def sl2_inverse(g: np.ndarray) -> np.ndarray:
    return np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]])


def mobius(g: np.ndarray, z: complex) -> complex:
    return (g[0, 0] * z + g[0, 1]) / (g[1, 0] * z + g[1, 1])


def distance(z: complex, w: complex) -> float:
    return math.acosh(1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag))


def trace_length(g: np.ndarray):
    """``2 arccosh(|tr g| / 2)``, in the precision of ``g``."""
    t = abs(np.trace(g)) / 2
    if t < 1:
        raise ValueError(f"elliptic element with |tr|/2 = {float(t)}")
    return 2 * np.arccosh(t)


# ---------------------------------------------------------------------------
# combinatorics of the polygon


@dataclass(frozen=True)
class PolygonEdge:
    index: int
    darts: tuple[int, ...]
    length_class: int
    partner: int
    base_multiple: int  # number of tesselation sides along the edge
    curve: int  # systole index
    corner: int  # realised square at the end of the edge
    sign: int  # +1 / -1 orientation of the angle offset at that corner


@dataclass(frozen=True)
class FundamentalPolygon:
    model: SurfaceModel
    subset: tuple[int, ...]
    edges: tuple[PolygonEdge, ...]
    corners: tuple[int, ...]  # crossing squares, one angle parameter each
    side: float
    dtype: type = np.float64

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_pairs(self) -> int:
        return len(self.edges) // 2

    @property
    def M(self) -> int:
        return len(self.corners)

    @property
    def n_parameters(self) -> int:
        return 3 * self.M - 3

    @cached_property
    def dart_edge(self) -> dict[int, int]:
        return {d: e.index for e in self.edges for d in e.darts}

    @cached_property
    def corner_index(self) -> dict[int, int]:
        return {q: t for t, q in enumerate(self.corners)}

    @cached_property
    def centring(self) -> np.ndarray:
        """Isometry moving the critical polygon's centre to ``i``.

        Side pairings are conjugated by it; traces do not change but the
        matrix entries stay small, which keeps words free of cancellation.
        """
        F = frames(self, np.zeros(self.n_pairs), np.zeros(self.M), start=np.eye(2, dtype=self.dtype))
        zs = [mobius(f.astype(np.float64), 1j) for f in F[:-1]]

        def spread(p):
            c = complex(p[0], math.exp(p[1]))
            return sum(math.cosh(distance(c, z)) for z in zs)

        p = minimize(spread, np.zeros(2), method="Nelder-Mead",
                     options={"xatol": 1e-10, "fatol": 1e-12}).x
        x, y = self.dtype(p[0]), np.exp(self.dtype(p[1]))
        return np.array([[1, -x], [0, y]], dtype=self.dtype) / np.sqrt(y)

    @cached_property
    def class_multiple(self) -> np.ndarray:
        out = np.zeros(self.n_pairs, dtype=np.int64)
        for e in self.edges:
            out[e.length_class] = e.base_multiple
        return out

    def to_json(self) -> dict:
        labels = self.model.labels(range(self.model.n))
        return {
            "m": self.model.m,
            "subset": self.model.labels(self.subset),
            "edges": [
                {"index": e.index, "length_class": e.length_class, "partner": e.partner,
                 "base_multiple": e.base_multiple, "curve_id": labels[e.curve]}
                for e in self.edges
            ],
            "vertices": [
                {"intersection_id": self.corner_index[e.corner], "sign": e.sign}
                for e in self.edges
            ],
        }


def cut_to_polygon(subset, cmap: CombinatorialMap, dtype=None) -> FundamentalPolygon:
    """Boundary walk of the single region left by a filling set.

    The walk starts at the least dart that follows a corner.  Corners are
    crossings of two chosen curves; maximal runs of darts between corners
    are the polygon's edges.
    """
    model = cmap.model
    subset = tuple(sorted(set(int(j) for j in subset)))
    cx = complementary_regions(subset, cmap)
    if len(cx.regions) != 1 or not cx.regions[0].is_disk:
        raise ValueError("subset must fill with exactly one complementary region")
    chosen = set(subset)
    crossing = {q for q, (a, b) in enumerate(model.square_to_systoles) if a in chosen and b in chosen}
    cut = cut_sides(cmap, subset)
    start = next(d for d in range(cmap.n_darts) if cut[cmap.dart_side[d]])
    walk = [start]
    while (d := cut_face_next(cmap, cut, walk[-1])) != start:
        walk.append(d)
    at_corner = [int(cmap.dart_corner[d]) in crossing for d in walk]
    # rotate so that walk[0] is the least dart beginning an edge
    starts = [t for t in range(len(walk)) if at_corner[t - 1]]
    t0 = min(starts, key=lambda t: walk[t])
    walk = walk[t0:] + walk[:t0]
    at_corner = at_corner[t0:] + at_corner[:t0]

    runs, cur = [], []
    for d, end in zip(walk, at_corner):
        cur.append(d)
        if end:
            runs.append(tuple(cur))
            cur = []
    by_sides: dict[frozenset, list[int]] = {}
    for t, run in enumerate(runs):
        by_sides.setdefault(frozenset(int(cmap.dart_side[d]) for d in run), []).append(t)
    classes, partner = {}, {}
    for key, members in by_sides.items():
        if len(members) != 2:
            raise ValueError("an arc does not appear exactly twice on the boundary")
        a, b = members
        partner[a], partner[b] = b, a
    order = sorted(by_sides, key=lambda k: min(by_sides[k]))
    for c, key in enumerate(order):
        for t in by_sides[key]:
            classes[t] = c
    corners = []
    edges = []
    for t, run in enumerate(runs):
        last = run[-1]
        q = int(cmap.dart_corner[last])
        if q not in corners:
            corners.append(q)
        face = cmap.dart_face(last)
        edges.append(PolygonEdge(
            index=t, darts=run, length_class=classes[t], partner=partner[t],
            base_multiple=len(run), curve=int(model.side_systole[cmap.dart_side[run[0]]]),
            corner=q, sign=1 if parity(face) == 0 else -1))
    dtype = precision_for(model.m) if dtype is None else dtype
    return FundamentalPolygon(model, subset, tuple(edges), tuple(corners),
                              side_length(model.m, dtype), dtype)


# ---------------------------------------------------------------------------
# geometry of a chart point


def moebius_edge_matrix(length: float, offset: float, theta: float) -> np.ndarray:
    """Closed form of one side step: translate by ``length + offset`` then turn
    by ``pi/2 + theta``; scaled to unit determinant."""
    e = math.exp(length + offset)
    s, c = math.sin(theta), math.cos(theta)
    A = np.array([[s + 1.0, -e * c], [c, e * (s + 1.0)]])
    return A / math.sqrt(2.0 * e * (1.0 + s))


def edge_matrix(length, angle, dtype=np.float64) -> np.ndarray:
    """Frame increment for one side followed by its corner."""
    return translation(length, dtype) @ rotation(pi_of(dtype) - angle, dtype)


def frames(polygon: FundamentalPolygon, delta: np.ndarray, phi: np.ndarray,
           start: np.ndarray | None = None) -> list[np.ndarray]:
    """Frames at the start of every edge, then the closing frame.

    ``start`` defaults to the centring isometry, so partial products stay
    small; the first vertex sits at ``i`` only before centring.
    """
    dt = polygon.dtype
    half_pi = pi_of(dt) / 2
    out = [polygon.centring if start is None else start]
    for e in polygon.edges:
        L = e.base_multiple * polygon.side + dt(delta[e.length_class])
        alpha = half_pi + e.sign * dt(phi[polygon.corner_index[e.corner]])
        out.append(out[-1] @ edge_matrix(L, alpha, dt))
    return out


def closure_residual(polygon: FundamentalPolygon, delta, phi) -> np.ndarray:
    """Three numbers vanishing exactly when the boundary walk closes up to sign."""
    P = sl2_inverse(polygon.centring) @ frames(polygon, delta, phi)[-1]
    if P[0, 0] + P[1, 1] < 0:
        P = -P
    return np.array([P[0, 1], P[1, 0], 0.5 * (P[0, 0] - P[1, 1])])


def holonomy_defect(polygon: FundamentalPolygon, delta=None, phi=None) -> float:
    delta = np.zeros(polygon.n_pairs) if delta is None else delta
    phi = np.zeros(polygon.M) if phi is None else phi
    P = sl2_inverse(polygon.centring) @ frames(polygon, delta, phi)[-1]
    eye = np.eye(2, dtype=polygon.dtype)
    return float(min(np.abs(P - eye).max(), np.abs(P + eye).max()))


def side_pairings(polygon: FundamentalPolygon, delta, phi) -> list[np.ndarray]:
    """``g_e`` maps the partner edge onto edge ``e`` reversing direction."""
    dt = polygon.dtype
    F = frames(polygon, delta, phi)
    half_turn = rotation(pi_of(dt), dt)
    out = []
    for e in polygon.edges:
        L = e.base_multiple * polygon.side + dt(delta[e.length_class])
        out.append(F[e.index] @ translation(L, dt) @ half_turn @ sl2_inverse(F[e.partner]))
    return out


def curve_word(polygon: FundamentalPolygon, cmap: CombinatorialMap, j: int) -> tuple[int, ...]:
    """Polygon edges crossed, in order, by a push-off of systole ``j``.

    The push-off runs through the four faces on the side of the systole
    where its axis bit is 0, crossing the sides of its four neighbours.
    """
    model = cmap.model
    s = model.systoles[j]
    i, m = s.axis, model.m
    v = min(model.sides[e][0] for e in model.systole_sides[j])
    up, down = cyc(i + 1, m), cyc(i - 1, m)
    path = [(v, up), (flip(v, up), down), (flip(flip(v, up), down), up), (flip(v, down), down)]
    cut = cut_sides(cmap, polygon.subset)
    word = []
    for face, k in path:
        d = cmap.dart(face, k)
        if cut[cmap.dart_side[d]]:
            word.append(polygon.dart_edge[d])
    return tuple(word)


def word_matrix(word, pairings) -> np.ndarray:
    W = np.eye(2, dtype=pairings[0].dtype)
    for e in word:
        W = W @ pairings[e]
    return W


def lengths_from_pairings(words, pairings) -> np.ndarray:
    return np.array([trace_length(word_matrix(w, pairings)) for w in words])


def arc_length_by_optimisation(polygon: FundamentalPolygon, word, delta=None, phi=None) -> float:
    """Shortest closed path with the given edge-crossing pattern.

    The path meets the crossed edges at points ``X_k`` (one parameter each);
    inside the polygon it runs straight from the entry point, the partner
    image of ``X_{k-1}``, to ``X_k``.
    """
    delta = np.zeros(polygon.n_pairs) if delta is None else delta
    phi = np.zeros(polygon.M) if phi is None else phi
    F = [f.astype(np.float64) for f in frames(polygon, delta, phi)]
    g = [x.astype(np.float64) for x in side_pairings(polygon, delta, phi)]
    ginv = [sl2_inverse(x) for x in g]
    lengths = [float(e.base_multiple * polygon.side + delta[e.length_class]) for e in polygon.edges]
    word = list(word)
    if not word:
        raise ValueError("curve crosses no polygon edge")

    def point(e, t):
        return mobius(F[e] @ translation(t * lengths[e]), 1j)

    def total(ts):
        xs = [point(e, t) for e, t in zip(word, ts)]
        return sum(distance(mobius(ginv[word[k - 1]], xs[k - 1]), xs[k]) for k in range(len(word)))

    best = None
    for t0 in (0.25, 0.5, 0.75):
        res = minimize(total, np.full(len(word), t0), method="L-BFGS-B",
                       bounds=[(0.0, 1.0)] * len(word), options={"ftol": 1e-15, "gtol": 1e-12})
        if best is None or res.fun < best:
            best = float(res.fun)
    return best


# ---------------------------------------------------------------------------
# chart of Teichmuller space


@dataclass
class ChartPoint:
    """``y`` holds the free length offsets, ``theta`` the angle offsets."""

    y: np.ndarray
    theta: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.y, self.theta])


@dataclass
class Chart:
    polygon: FundamentalPolygon
    dependent: tuple[int, int, int]
    newton_tol: float = 1e-12
    newton_iter: int = 50
    words: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def free(self) -> list[int]:
        return [c for c in range(self.polygon.n_pairs) if c not in self.dependent]

    @property
    def dim(self) -> int:
        return len(self.free) + self.polygon.M

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        nf = len(self.free)
        return x[:nf], x[nf:]

    def solve_delta(self, x: np.ndarray) -> np.ndarray:
        """Full length-offset vector with the dependent entries solved by Newton."""
        dt = self.polygon.dtype
        y, phi = self.split(np.asarray(x, dtype=dt))
        delta = np.zeros(self.polygon.n_pairs, dtype=dt)
        delta[self.free] = y
        dep = list(self.dependent)
        h = 1e-7
        r = closure_residual(self.polygon, delta, phi)
        polish = 0
        for _ in range(self.newton_iter):
            J = np.empty((3, 3))
            for col, c in enumerate(dep):
                d1, d2 = delta.copy(), delta.copy()
                d1[c] += h
                d2[c] -= h
                J[:, col] = (closure_residual(self.polygon, d1, phi)
                             - closure_residual(self.polygon, d2, phi)) / (2 * h)
            trial = delta.copy()
            # the 3x3 step itself only needs double precision
            trial[dep] -= np.linalg.solve(J.astype(np.float64), r.astype(np.float64)).astype(dt)
            r_new = closure_residual(self.polygon, trial, phi)
            converged = np.abs(r).max() < self.newton_tol
            if converged and np.abs(r_new).max() >= np.abs(r).max():
                break
            delta, r = trial, r_new
            # a couple of extra steps past the tolerance take the offsets to rounding level
            if np.abs(r).max() < self.newton_tol:
                polish += 1
                if polish > 6:
                    break
        if np.abs(r).max() < self.newton_tol:
            return delta
        raise ClosureError(f"Newton did not close the polygon (residual {np.abs(r).max():.3e})")

    def lengths(self, x: np.ndarray) -> np.ndarray:
        delta = self.solve_delta(x)
        _, phi = self.split(np.asarray(x, dtype=self.polygon.dtype))
        return lengths_from_pairings(self.words, side_pairings(self.polygon, delta, phi))


def solve_dependent_lengths(chart: Chart, free) -> ChartPoint:
    """Complete a chart point: ``y`` comes back as the full per-pair offset vector."""
    x = np.asarray(free, dtype=float)
    _, theta = chart.split(x)
    return ChartPoint(chart.solve_delta(x), np.asarray(theta, dtype=chart.polygon.dtype))


def systole_length(chart: Chart, j: int, x=None) -> float:
    """Length of curve ``j`` (position in ``chart.words``) at chart point ``x``."""
    x = np.zeros(chart.dim) if x is None else np.asarray(x, dtype=float)
    delta = chart.solve_delta(x)
    _, phi = chart.split(np.asarray(x, dtype=chart.polygon.dtype))
    return float(trace_length(word_matrix(chart.words[j], side_pairings(chart.polygon, delta, phi))))


def closure_minor(polygon: FundamentalPolygon, classes, h: float = 1e-7) -> np.ndarray:
    delta0, phi0 = np.zeros(polygon.n_pairs), np.zeros(polygon.M)
    J = np.empty((3, len(classes)))
    for col, c in enumerate(classes):
        d1, d2 = delta0.copy(), delta0.copy()
        d1[c] += h
        d2[c] -= h
        J[:, col] = (closure_residual(polygon, d1, phi0) - closure_residual(polygon, d2, phi0)) / (2 * h)
    return J


def choose_dependent(polygon: FundamentalPolygon) -> tuple[int, int, int]:
    """Triple of length classes whose closure minor has the largest ``|det|``.

    With that choice every slaved offset moves by at most the size of the
    free perturbation (each coefficient of ``minor^-1 @ full`` is a ratio of
    determinants, hence at most 1).  Ties go to the lexicographically least
    triple.
    """
    full = closure_minor(polygon, range(polygon.n_pairs))
    best, best_det = None, 0.0
    for triple in itertools.combinations(range(polygon.n_pairs), 3):
        d = abs(np.linalg.det(full[:, triple]))
        if d > best_det * (1 + 1e-9):
            best, best_det = triple, d
    if best is None:
        raise ClosureError("closure is degenerate in the length offsets")
    return best


def build_chart(polygon: FundamentalPolygon, cmap: CombinatorialMap, newton_tol: float = 1e-12,
                curves=None) -> Chart:
    curves = range(cmap.model.n) if curves is None else curves
    words = tuple(curve_word(polygon, cmap, j) for j in curves)
    return Chart(polygon, choose_dependent(polygon), newton_tol, words=words)


def systole_lengths(chart: Chart, x=None) -> np.ndarray:
    return chart.lengths(np.zeros(chart.dim) if x is None else x)


# ---------------------------------------------------------------------------
# gradients, rank and eutacticity


@dataclass(frozen=True)
class LengthJacobian:
    matrix: np.ndarray  # curves x chart coordinates
    step: float

    def to_csv(self) -> str:
        return "\n".join(",".join(f"{v:.12e}" for v in row) for row in self.matrix) + "\n"


def length_jacobian(chart: Chart, step: float = 1e-5, x0=None, workers: int = 1) -> LengthJacobian:
    """Central differences in every chart coordinate, columns in coordinate order."""
    x0 = np.zeros(chart.dim) if x0 is None else np.asarray(x0, dtype=float)

    dt = chart.polygon.dtype
    x0 = x0.astype(dt)

    def column(i):
        e = np.zeros(chart.dim, dtype=dt)
        e[i] = step
        diff = chart.lengths(x0 + e) - chart.lengths(x0 - e)
        return (diff / (2 * dt(step))).astype(np.float64)

    if workers <= 1:
        cols = [column(i) for i in range(chart.dim)]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(column, range(chart.dim)))
    return LengthJacobian(np.column_stack(cols), step)


@dataclass(frozen=True)
class RankReport:
    rank: int
    gap: float
    singular_values: tuple[float, ...]


def numerical_rank(matrix: np.ndarray, tol: float = 1e-6, min_gap: float = 1e3) -> RankReport:
    sv = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return RankReport(0, math.inf, tuple(sv))
    r = int((sv > tol * sv[0]).sum())
    gap = math.inf if r >= sv.size else float(sv[r - 1] / max(sv[r], 1e-300))
    if gap <= min_gap:
        raise RankError(f"no clean singular value gap at rank {r} (ratio {gap:.3g})", tuple(sv))
    return RankReport(r, gap, tuple(float(s) for s in sv))


def index(jacobian: LengthJacobian | np.ndarray, tol: float = 1e-6, min_gap: float = 1e3) -> int:
    matrix = jacobian.matrix if isinstance(jacobian, LengthJacobian) else jacobian
    return numerical_rank(matrix, tol, min_gap).rank


def index_formula(m: int) -> int:
    return m * 2 ** (m - 3) - (m + 3)


def _row_space_basis(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the column space, as an (n_curves, rank) array."""
    U, sv, _ = np.linalg.svd(matrix, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return U[:, :0]
    return U[:, : int((sv > tol * sv[0]).sum())]


def check_eutactic(jacobian: LengthJacobian | np.ndarray, tol: float = 1e-6) -> bool:
    """True when no direction raises some lengths without lowering another.

    By Stiemke's alternative this holds exactly when the gradients admit a
    vanishing combination with all coefficients positive.  The gradients are
    first projected onto their numerical span so that finite-difference noise
    in null directions cannot spoil the equality.
    """
    matrix = jacobian.matrix if isinstance(jacobian, LengthJacobian) else np.asarray(jacobian, float)
    U = _row_space_basis(matrix, tol)
    n = matrix.shape[0]
    if U.shape[1] == 0:
        return True
    res = linprog(np.zeros(n), A_eq=U.T, b_eq=np.zeros(U.shape[1]),
                  bounds=[(1.0, None)] * n, method="highs")
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    raise RuntimeError(f"eutacticity LP indeterminate: {res.message}")


def improving_direction(jacobian: LengthJacobian | np.ndarray, tol: float = 1e-6) -> np.ndarray | None:
    """A direction ``v`` with ``Jv >= 0`` and ``sum(Jv) > 0``, or None."""
    matrix = jacobian.matrix if isinstance(jacobian, LengthJacobian) else np.asarray(jacobian, float)
    U = _row_space_basis(matrix, tol)
    n, r = U.shape
    if r == 0:
        return None
    # maximise sum(U w) subject to U w >= 0, |w| <= 1
    res = linprog(-U.sum(axis=0), A_ub=-U, b_ub=np.zeros(n), bounds=[(-1.0, 1.0)] * r, method="highs")
    if res.status != 0 or -res.fun <= 1e-9:
        return None
    return np.linalg.lstsq(matrix, U @ res.x, rcond=None)[0]
