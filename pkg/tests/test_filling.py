import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systolic.exhaustive import mask_to_subset, minimal_table, popcounts
from systolic.filling import (
    RegionCounter,
    bound_check_2g,
    complementary_regions,
    intersection_quadratic,
    is_filling,
    is_minimal_filling,
    shrink_to_minimal,
)
from systolic.surface import incidence_matrices, intersection_count

subsets20 = st.lists(st.integers(0, 19), max_size=20, unique=True)


def to_mask(subset):
    return sum(1 << j for j in subset)


@given(subsets20)
@settings(max_examples=150, deadline=None)
def test_region_count_matches_region_topology(cmap5, counter5, subset):
    assert counter5.fills(counter5.mask(subset)) == is_filling(subset, cmap5)


@given(subsets20)
@settings(max_examples=150, deadline=None)
def test_exhaustive_table_matches_counter(filling5, counter5, subset):
    assert bool(filling5[to_mask(subset)]) == counter5.fills(counter5.mask(subset))


def test_trivial_sets(cmap5, model5, counter5):
    assert is_filling(range(model5.n), cmap5)
    assert not is_filling([], cmap5)
    assert not is_filling([0], cmap5)
    assert not counter5.fills(np.zeros(model5.n, dtype=bool))


def test_regions_euler_characteristic(cmap5, model5):
    for subset in ([0], [0, 1, 2], list(range(10)), list(range(20))):
        cx = complementary_regions(subset, cmap5)
        # the cut graph has the crossings as vertices and 4 arcs per crossing / 2
        assert cx.crossings == intersection_count(model5, subset)


def test_filling_is_monotone(filling5):
    n = 20
    masks = np.arange(2**n)
    for c in range(n):
        has = (masks >> c) & 1 == 1
        # adding a curve to a filling set keeps it filling
        assert not (filling5[masks[~has]] & ~filling5[masks[~has] | (1 << c)]).any()


def test_filling_sets_meet_the_crossing_bound(filling5, model5):
    A, _ = incidence_matrices(model5)
    masks = np.flatnonzero(filling5)
    crossings = np.zeros(len(masks), dtype=np.int64)
    for a, b in model5.square_to_systoles:
        crossings += ((masks >> a) & 1) & ((masks >> b) & 1)
    assert crossings.min() >= 2 * model5.genus - 1


def test_minimal_sets_and_2g_bound(filling5, cmap5, model5):
    minimal = minimal_table(filling5, 20)
    sizes = popcounts(20)[minimal]
    assert sizes.min() == 8 and sizes.max() == 10
    assert sizes.max() <= 2 * model5.genus
    rng = np.random.default_rng(0)
    for k in rng.choice(np.flatnonzero(minimal), 25, replace=False):
        subset = mask_to_subset(k)
        assert is_minimal_filling(subset, cmap5)
        if len(complementary_regions(subset, cmap5).regions) == 1:
            assert bound_check_2g(subset, cmap5)


def test_2g_bound_rejects_non_disks(cmap5):
    with pytest.raises(ValueError):
        bound_check_2g([0, 1], cmap5)


def test_shrink_gives_minimal(cmap5, rng):
    for _ in range(5):
        start = rng.choice(20, 15, replace=False)
        if not is_filling(start, cmap5):
            continue
        out = shrink_to_minimal(start, cmap5)
        assert set(out) <= set(start.tolist())
        assert is_minimal_filling(out, cmap5)


def test_counter_minimality(counter5, min5):
    x = counter5.mask(min5.subset)
    assert counter5.is_minimal(x)
    assert counter5.removable(x) == []
    y = x.copy()
    y[[j for j in range(20) if not x[j]][0]] = True
    assert counter5.fills(y) and not counter5.is_minimal(y)


@given(subsets20)
@settings(max_examples=60, deadline=None)
def test_quadratic_form_counts_crossings(model5, subset):
    A, _ = incidence_matrices(model5)
    assert intersection_quadratic(subset, A) == intersection_count(model5, subset)
