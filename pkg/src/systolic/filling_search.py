"""Smallest and largest minimal filling sets.

The smallest ones come from the 0-1 program in :mod:`systolic.ilp` with lazy
cover cuts: whenever an optimum does not fill, essential loops in its
complement are read off a simplified cube graph and every filling set must
choose a systole crossing each loop.  The largest ones come from the
exhaustive oracle for ``m = 5`` and from a maximising program with
superset-exclusion cuts otherwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from systolic.exact import RationalEchelon
from systolic.filling import RegionCounter
from systolic.homology import CombinatorialMap, build_combinatorial_map
from systolic.ilp import IlpModel, Row, SolveResult, add_symmetry_breaking, make_solver
from systolic.surface import SurfaceModel, flip, square_at
from systolic.symmetry import (
    axis_class,
    canonical_form,
    group_table,
    orbit,
    restrict,
    setwise_stabilizer,
    subset_orbit_representatives,
)


# ---------------------------------------------------------------------------
# simplified graph and boundary loops


@dataclass(frozen=True)
class SimplifiedGraph:
    """Cube subgraph left after cutting and pruning.

    ``edges`` are side indices, ``squares`` the realised squares whose four
    sides all survive (they are the 2-cells of the region complex).
    """

    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    squares: tuple[int, ...]


@dataclass(frozen=True)
class BoundaryLoop:
    faces: tuple[int, ...]  # closed vertex walk, first vertex not repeated
    sides: tuple[int, ...]
    crossers: tuple[int, ...]  # systoles owning a side of the loop


def square_sides(model: SurfaceModel) -> list[tuple[int, ...]]:
    """The four sides (cube edges) of every realised square."""
    m = model.m
    out = []
    for q in model.squares:
        verts = q.vertices(m)
        sides = set()
        for v in verts:
            for w in verts:
                d = v ^ w
                if v < w and d & (d - 1) == 0:
                    sides.add(model.side_index[(v, d.bit_length())])
        out.append(tuple(sorted(sides)))
    return out


def _side_ends(model: SurfaceModel, e: int) -> tuple[int, int]:
    v, k = model.sides[e]
    return v, flip(v, k)


def simplified_graph(solution, model: SurfaceModel) -> SimplifiedGraph:
    """Cut along ``solution`` and prune with homotopy-preserving collapses.

    Step 1 drops the sides of chosen systoles.  Step 2 repeatedly drops the
    least valency-1 vertex (or isolated vertex), else the least valency-2
    vertex lying on a surviving square.  When Step 2 is stuck, Step 3 drops
    the least edge at a vertex of valency at least 3 that lies on exactly
    one surviving square, and Step 2 resumes.
    """
    chosen = set(int(j) for j in solution)
    owner = model.side_systole
    edges = {e for e in range(len(model.sides)) if int(owner[e]) not in chosen}
    sq_sides = square_sides(model)
    squares = {q for q, ss in enumerate(sq_sides) if all(e in edges for e in ss)}
    on_squares: dict[int, set[int]] = {e: set() for e in edges}
    for q in squares:
        for e in sq_sides[q]:
            on_squares[e].add(q)
    incident: dict[int, set[int]] = {v: set() for v in range(2 ** model.m)}
    for e in edges:
        a, b = _side_ends(model, e)
        incident[a].add(e)
        incident[b].add(e)

    def drop_edge(e):
        edges.discard(e)
        for q in list(on_squares.pop(e, ())):
            drop_square(q)
        a, b = _side_ends(model, e)
        incident[a].discard(e)
        incident[b].discard(e)

    def drop_square(q):
        if q not in squares:
            return
        squares.discard(q)
        for e in sq_sides[q]:
            if e in on_squares:
                on_squares[e].discard(q)

    while True:
        v = next((v for v in sorted(incident) if len(incident[v]) <= 1), None)
        if v is not None:
            for e in list(incident[v]):
                drop_edge(e)
            del incident[v]
            continue
        v = next((v for v in sorted(incident)
                  if len(incident[v]) == 2 and any(on_squares[e] for e in incident[v])), None)
        if v is not None:
            for e in sorted(incident[v]):
                drop_edge(e)
            del incident[v]
            continue
        e = next((e for e in sorted(edges)
                  if len(on_squares[e]) == 1
                  and max(len(incident[x]) for x in _side_ends(model, e)) >= 3), None)
        if e is None:
            break
        drop_edge(e)
    return SimplifiedGraph(tuple(sorted(incident)), tuple(sorted(edges)), tuple(sorted(squares)))


def _walk_vector(model: SurfaceModel, faces) -> dict[int, int]:
    """Signed side chain of a closed face walk (side orientation low -> high face)."""
    vec: dict[int, int] = {}
    for a, b in zip(faces, faces[1:] + faces[:1]):
        d = a ^ b
        k = d.bit_length()
        e = model.side_index[(min(a, b), k)]
        vec[e] = vec.get(e, 0) + (1 if a < b else -1)
    return {e: c for e, c in vec.items() if c}


class _RegionHomology:
    """Membership test for the 2-cell boundaries of a simplified graph."""

    def __init__(self, model: SurfaceModel, graph: SimplifiedGraph):
        self.model = model
        self.base = RationalEchelon()
        for q in graph.squares:
            sq = model.squares[q]
            i, j = sq.axes
            v = sq.vertices(model.m)[0]
            walk = [v, flip(v, i), flip(flip(v, i), j), flip(v, j)]
            self.base.add(_walk_vector(model, walk))

    def essential(self, faces) -> bool:
        return bool(self.base.reduce(_walk_vector(self.model, list(faces))))


def _loops_of(model: SurfaceModel, graph: nx.Graph) -> list[tuple[int, ...]]:
    loops = []
    for comp in sorted(nx.connected_components(graph), key=min):
        sub = graph.subgraph(comp)
        for cyc in nx.cycle_basis(sub, root=min(comp)):
            loops.append(tuple(_rotate_min(cyc)))
    return loops


def _rotate_min(cyc):
    i = cyc.index(min(cyc))
    cyc = cyc[i:] + cyc[:i]
    # fix the direction so the second vertex is the smaller neighbour
    if len(cyc) > 2 and cyc[-1] < cyc[1]:
        cyc = cyc[:1] + cyc[1:][::-1]
    return cyc


def boundary_loops(graph: SimplifiedGraph, model: SurfaceModel) -> list[BoundaryLoop]:
    """Essential loops of the simplified graph.

    A cycle basis of the boundary-edge subgraph (edges on no surviving
    square) is tried first; when none of its cycles is homologically
    nontrivial in the region complex, a cycle basis of the whole simplified
    graph is used instead.  Only nontrivial cycles are returned.
    """
    hom = _RegionHomology(model, graph)
    on_square = set()
    for q in graph.squares:
        sq = model.squares[q]
        verts = sq.vertices(model.m)
        for v in verts:
            for w in verts:
                d = v ^ w
                if v < w and d & (d - 1) == 0:
                    on_square.add(model.side_index[(v, d.bit_length())])
    owner = model.side_systole

    def build(edge_ids):
        g = nx.Graph()
        for e in sorted(edge_ids):
            g.add_edge(*_side_ends(model, e))
        return g

    boundary = [e for e in graph.edges if e not in on_square]
    for candidates in (_loops_of(model, build(boundary)), _loops_of(model, build(graph.edges))):
        found = []
        for faces in candidates:
            if hom.essential(faces):
                sides = tuple(sorted(_walk_vector(model, list(faces))))
                crossers = tuple(sorted({int(owner[e]) for e in sides}))
                found.append(BoundaryLoop(faces, sides, crossers))
        if found:
            return found
    return []


def cover_cuts(solution, model: SurfaceModel) -> list[Row]:
    """``sum_{j crosses loop} x_j >= 1`` for each essential loop of a non-filling solution."""
    loops = boundary_loops(simplified_graph(solution, model), model)
    return [Row.at_least_one(loop.crossers) for loop in loops]


# ---------------------------------------------------------------------------
# search drivers


@dataclass
class SearchOptions:
    solver: str = "bridge"
    time_limit: float | None = None
    threads: int = 1
    symmetry: bool = True  # add orbit images of every cut
    max_rounds: int = 10_000
    seed: int = 0
    restarts: int = 400  # greedy restarts seeding the maximum search
    exhaustive: bool = True  # answer the maximum by brute force when n <= 24


@dataclass(frozen=True)
class FillingResult:
    m: int
    kind: str  # min | max
    subset: tuple[int, ...]
    proved_optimal: bool
    cuts_used: int
    status: str  # optimal | time_limit | exhaustive
    rounds: int = 0
    notes: tuple[str, ...] = ()

    @property
    def cardinality(self) -> int:
        return len(self.subset)

    def to_json(self, model: SurfaceModel) -> dict:
        return {
            "m": self.m,
            "kind": self.kind,
            "systoles": model.labels(self.subset),
            "certificate": {
                "cardinality": self.cardinality,
                "proved_optimal": self.proved_optimal,
                "cuts_used": self.cuts_used,
            },
        }


class _Deadline:
    def __init__(self, limit):
        self.end = None if limit is None else time.monotonic() + limit

    def remaining(self):
        return None if self.end is None else max(self.end - time.monotonic(), 1.0)

    def expired(self):
        return self.end is not None and time.monotonic() >= self.end


def _add_rows(ilp: IlpModel, rows, perms) -> int:
    added = 0
    for row in rows:
        images = [row] if perms is None else _row_images(row, perms)
        for r in images:
            added += ilp.add_cut(r)
    return added


def _row_images(row: Row, perms: np.ndarray) -> list[Row]:
    """Images of a unit-coefficient row under the group."""
    idx = [j for j, _ in row.coef]
    return [Row(tuple((j, 1.0) for j in img), row.lb, row.ub) for img in sorted(orbit(idx, perms))]


def _lazy_solve(ilp: IlpModel, solver, counter: RegionCounter, perms, deadline: _Deadline,
                max_rounds: int) -> tuple[SolveResult, int]:
    """Re-solve with cover cuts until the optimum fills (or the model is infeasible)."""
    cuts = 0
    for rounds in range(1, max_rounds + 1):
        solver.time_limit = deadline.remaining()
        res = solver.solve(ilp)
        if res.status != "optimal":
            return res, rounds
        if counter.fills(counter.mask(res.chosen)):
            return res, rounds
        rows = cover_cuts(res.chosen, ilp.model)
        if not rows:
            raise RuntimeError("non-filling optimum without an essential loop")
        cuts += _add_rows(ilp, rows, perms)
    raise RuntimeError("lazy cut loop did not converge")


def min_filling(model: SurfaceModel, options: SearchOptions | None = None) -> FillingResult:
    """Smallest filling set, certified by the relaxation bound."""
    options = options or SearchOptions()
    solver = make_solver(options.solver, options.time_limit, options.threads)
    perms = group_table(model.m) if options.symmetry else None
    counter = RegionCounter(model)
    ilp = IlpModel(model)
    res, rounds = _lazy_solve(ilp, solver, counter, perms, _Deadline(options.time_limit),
                              options.max_rounds)
    if res.chosen is None:
        raise RuntimeError(f"no filling set found ({res.status})")
    proved = res.status == "optimal"
    return FillingResult(model.m, "min", tuple(res.chosen), proved, len(ilp.cuts),
                         res.status, rounds)


def optimal_classes(model: SurfaceModel, N: int, options: SearchOptions | None = None,
                    limit: int | None = None) -> list[tuple[int, ...]]:
    """Canonical representatives of all filling sets of size ``N`` up to symmetry.

    The search is split by the zero pattern on the axis-1 systoles, one
    program per orbit representative of patterns.  Every class found is
    excluded everywhere by no-good rows on all its members; cover cuts and
    no-goods go to a pool shared by all the subproblems.  Each subproblem is
    re-solved until infeasible.
    """
    options = options or SearchOptions()
    solver = make_solver(options.solver, None, options.threads)
    perms = group_table(model.m)
    counter = RegionCounter(model)
    members = axis_class(model, 1)
    local = restrict(setwise_stabilizer(perms, members), members)
    patterns = subset_orbit_representatives(local, len(members))
    pool = IlpModel(model)
    deadline = _Deadline(options.time_limit)
    classes: list[tuple[int, ...]] = []
    for zeros in patterns:
        ilp = add_symmetry_breaking(pool, members, [members[t] for t in zeros], N)
        while limit is None or len(classes) < limit:
            before = len(ilp.cuts)
            res, _ = _lazy_solve(ilp, solver, counter, perms if options.symmetry else None,
                                 deadline, options.max_rounds)
            for row in ilp.cuts[before:]:
                pool.add_cut(row)
            if res.status == "infeasible":
                break
            if res.status != "optimal":
                raise TimeoutError("class enumeration hit the time limit")
            rep = canonical_form(res.chosen, perms)
            classes.append(rep)
            for img in sorted(orbit(rep, perms)):
                row = Row.at_most(img, N - 1)
                ilp.add_cut(row)
                pool.add_cut(row)
    return sorted(classes)


def greedy_minimal(counter: RegionCounter, order) -> np.ndarray:
    """Start from all systoles and drop curves in ``order`` while the set fills."""
    x = np.ones(counter.model.n, dtype=bool)
    for c in order:
        x[c] = False
        if not counter.fills(x):
            x[c] = True
    return x


def _shrink(counter: RegionCounter, x: np.ndarray) -> np.ndarray:
    x = x.copy()
    while True:
        drop = counter.removable(x)
        if not drop:
            return x
        x[drop[-1]] = False


def max_minimal_filling(model: SurfaceModel, options: SearchOptions | None = None) -> FillingResult:
    """Largest minimal filling set.

    Up to 24 systoles every subset is examined.  Beyond that, seeded greedy
    restarts give a lower bound and a maximising program asks for a larger
    filling set; non-filling answers get cover cuts, non-minimal ones are
    shrunk to a minimal filling ``F`` and every proper superset of ``F`` (and
    of its images) is excluded.  Infeasibility proves optimality.
    """
    options = options or SearchOptions()
    if model.n <= 24 and options.exhaustive:
        return _max_exhaustive(model)
    counter = RegionCounter(model)
    rng = np.random.default_rng(options.seed)
    best = None
    for _ in range(options.restarts):
        x = greedy_minimal(counter, rng.permutation(model.n))
        if best is None or x.sum() > best.sum():
            best = x
    perms = group_table(model.m) if options.symmetry else None
    solver = make_solver(options.solver, None, options.threads)
    deadline = _Deadline(options.time_limit)
    ilp = IlpModel(model, sense="max")
    rounds, status = 0, "optimal"
    while rounds < options.max_rounds:
        if deadline.expired():
            status = "time_limit"
            break
        rounds += 1
        floor = Row(tuple((j, 1.0) for j in range(model.n)), float(best.sum() + 1), np.inf)
        trial = ilp.copy()
        trial.add_cut(floor)
        solver.time_limit = deadline.remaining()
        res = solver.solve(trial)
        if res.status == "infeasible":
            break
        if res.chosen is None or res.status != "optimal":
            status = "time_limit"
            break
        x = counter.mask(res.chosen)
        if not counter.fills(x):
            _add_rows(ilp, cover_cuts(res.chosen, model), perms)
            continue
        f = _shrink(counter, x)
        if f.sum() > best.sum():
            best = f
        members = [int(j) for j in np.flatnonzero(f)]
        images = [tuple(members)] if perms is None else sorted(orbit(members, perms))
        for img in images:
            inside = set(img)
            for j in range(model.n):
                if j not in inside:
                    ilp.add_cut(Row(tuple((i, 1.0) for i in sorted(inside | {j})),
                                    -np.inf, float(len(inside))))
    else:
        status = "time_limit"
    subset = tuple(int(j) for j in np.flatnonzero(best))
    return FillingResult(model.m, "max", subset, status == "optimal", len(ilp.cuts), status, rounds)


def _max_exhaustive(model: SurfaceModel) -> FillingResult:
    from systolic.exhaustive import filling_table, mask_to_subset, minimal_table, popcounts

    table = minimal_table(filling_table(model), model.n)
    sizes = np.where(table, popcounts(model.n), -1)
    top = int(np.flatnonzero(sizes == sizes.max())[0])
    subset = canonical_form(mask_to_subset(top), group_table(model.m))
    return FillingResult(model.m, "max", subset, True, 0, "exhaustive")


def min_exhaustive(model: SurfaceModel) -> tuple[int, list[tuple[int, ...]]]:
    """Minimum filling cardinality and its classes from the brute-force table."""
    from systolic.exhaustive import filling_table, mask_to_subset, popcounts

    table = filling_table(model)
    sizes = np.where(table, popcounts(model.n), model.n + 1)
    low = int(sizes.min())
    perms = group_table(model.m)
    classes = sorted({canonical_form(mask_to_subset(k), perms) for k in np.flatnonzero(sizes == low)})
    return low, classes


# ---------------------------------------------------------------------------
# symmetry-broken case split


@dataclass(frozen=True)
class RestrictedOutcome:
    representative: tuple[int, ...]  # local indices of zeros in the base class
    status: str
    chosen: tuple[int, ...] | None
    fills: bool | None


def restricted_search(model: SurfaceModel, N: int, representatives, class_members,
                      options: SearchOptions | None = None, workers: int = 1) -> list[RestrictedOutcome]:
    """Solve one cardinality-``N`` program per orbit representative of zero patterns.

    Outcomes are returned in representative order whatever the worker count.
    """
    options = options or SearchOptions()
    members = sorted(class_members)

    def one(rep):
        solver = make_solver(options.solver, options.time_limit, options.threads)
        counter = RegionCounter(model)
        ilp = add_symmetry_breaking(IlpModel(model), members, [members[t] for t in rep], N)
        res, _ = _lazy_solve(ilp, solver, counter, None, _Deadline(options.time_limit),
                             options.max_rounds)
        fills = None if res.chosen is None else counter.fills(counter.mask(res.chosen))
        return RestrictedOutcome(tuple(rep), res.status, res.chosen, fills)

    reps = list(representatives)
    if workers <= 1:
        return [one(r) for r in reps]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, reps))
