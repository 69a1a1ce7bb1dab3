import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systolic.exhaustive import mask_to_subset, popcounts
from systolic.filling import is_filling, is_minimal_filling
from systolic.filling_search import (
    SearchOptions,
    boundary_loops,
    cover_cuts,
    greedy_minimal,
    max_minimal_filling,
    min_exhaustive,
    min_filling,
    optimal_classes,
    restricted_search,
    simplified_graph,
)
from systolic.surface import min_intersections
from systolic.symmetry import axis_class, canonical_form, restrict, setwise_stabilizer, subset_orbit_representatives


def satisfied(row, mask):
    total = sum(c for j, c in row.coef if (mask >> j) & 1)
    return row.lb - 1e-9 <= total <= row.ub + 1e-9


@given(st.lists(st.integers(0, 19), min_size=1, max_size=12, unique=True))
@settings(max_examples=40, deadline=None)
def test_cover_cuts_are_valid(model5, filling5, counter5, subset):
    if counter5.fills(counter5.mask(subset)):
        return
    rows = cover_cuts(subset, model5)
    assert rows, "a non-filling set must expose an essential loop"
    own = sum(1 << j for j in subset)
    for row in rows:
        assert not satisfied(row, own)
    # every filling set of the surface satisfies every cut
    fill = np.flatnonzero(filling5)
    for row in rows:
        idx = np.array([j for j, _ in row.coef])
        hit = ((fill[:, None] >> idx[None, :]) & 1).sum(axis=1)
        assert (hit >= row.lb).all()


def test_simplified_graph_of_empty_set(model5):
    g = simplified_graph((), model5)
    assert g.vertices and g.edges
    loops = boundary_loops(g, model5)
    assert loops and all(loop.crossers for loop in loops)


def test_simplified_graph_shrinks(model5):
    full = simplified_graph((), model5)
    part = simplified_graph((0, 5), model5)
    assert set(part.edges) <= set(range(len(model5.sides)))
    assert len(part.edges) <= len(full.edges)
    owners = set(int(model5.side_systole[e]) for e in part.edges)
    assert not owners & {0, 5}


def test_min_filling_m5(min5, cmap5, filling5):
    assert min5.cardinality == 8 and min5.proved_optimal
    assert is_minimal_filling(min5.subset, cmap5)
    low, classes = min_exhaustive(__import__("systolic").build_surface(5))
    assert low == 8 and len(classes) == 1


def test_min_filling_classes_m5(model5, perms5, min5):
    classes = optimal_classes(model5, 8)
    assert len(classes) == 1
    assert classes[0] == canonical_form(min5.subset, perms5)


def test_builtin_solver_agrees(model5):
    res = min_filling(model5, SearchOptions(solver="builtin"))
    assert res.cardinality == 8 and res.proved_optimal


def test_min_filling_without_symmetry(model5):
    assert min_filling(model5, SearchOptions(symmetry=False)).cardinality == 8


def test_max_minimal_m5(model5, cmap5):
    res = max_minimal_filling(model5)
    assert res.cardinality == 10 and res.proved_optimal
    assert is_minimal_filling(res.subset, cmap5)


def test_greedy_minimal_is_minimal(model5, counter5, rng):
    for _ in range(10):
        x = greedy_minimal(counter5, rng.permutation(model5.n))
        assert counter5.is_minimal(x)
        assert 8 <= x.sum() <= 10


def test_minimum_meets_crossing_bound(model5, min5, counter5):
    assert counter5.crossings(counter5.mask(min5.subset)) >= min_intersections(5)


def test_restricted_search_split(model5, perms5, filling5):
    members = axis_class(model5, 1)
    local = restrict(setwise_stabilizer(perms5, members), members)
    reps = subset_orbit_representatives(local, len(members))
    for N, feasible in ((7, False), (8, True)):
        outcomes = restricted_search(model5, N, reps, members)
        assert [o.representative for o in outcomes] == [tuple(r) for r in reps]
        found = [o for o in outcomes if o.status == "optimal"]
        assert bool(found) == feasible
        assert all(o.fills for o in found)
    # oracle: which zero patterns of the axis-1 class admit a filling 8-set
    masks = np.flatnonzero(filling5 & (popcounts(20) == 8))
    expect = set()
    for k in masks:
        zeros = tuple(t for t, j in enumerate(sorted(members)) if not (k >> j) & 1)
        expect.add(canonical_form(zeros, local))
    got = {o.representative for o in restricted_search(model5, 8, reps, members) if o.status == "optimal"}
    assert got == expect


def test_restricted_search_is_order_stable(model5, perms5):
    members = axis_class(model5, 1)
    local = restrict(setwise_stabilizer(perms5, members), members)
    reps = subset_orbit_representatives(local, 2)
    one = restricted_search(model5, 8, reps, members, workers=1)
    many = restricted_search(model5, 8, reps, members, workers=3)
    assert [(o.representative, o.status) for o in one] == [(o.representative, o.status) for o in many]


def test_result_json(model5, min5):
    data = min5.to_json(model5)
    assert data["certificate"]["cardinality"] == 8
    assert len(data["systoles"]) == 8 and data["kind"] == "min"
