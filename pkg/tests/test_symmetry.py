import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systolic.surface import build_surface, incidence_matrices
from systolic.symmetry import (
    act,
    automorphism_group,
    axis_class,
    canonical_form,
    group_table,
    identity,
    orbit,
    orbit_count_burnside,
    restrict,
    setwise_stabilizer,
    subset_orbit_representatives,
    systole_permutation,
)


@pytest.mark.parametrize("m,order", [(5, 320), (6, 768), (7, 1792)])
def test_group_order(m, order):
    # dihedral axis symmetries times all 2^m flips
    assert len(automorphism_group(m)) == order == 2 * m * 2**m


def test_fast_group_matches_full_filter():
    assert automorphism_group(5, "filter") == automorphism_group(5, "fast")


def test_group_is_closed():
    group = automorphism_group(5)
    members = set(group)
    assert identity(5) in members
    for g, h in itertools.islice(itertools.product(group, group), 0, None, 97):
        assert g.compose(h) in members
    for g in group:
        assert g.inverse() in members
        assert g.compose(g.inverse()) == identity(5)


def test_permutations_preserve_intersections(perms5, model5):
    A, _ = incidence_matrices(model5)
    for p in perms5:
        assert sorted(p) == list(range(model5.n))
        assert (A[np.ix_(p, p)] == A).all()


def test_act_matches_index_permutation(model5):
    for g in automorphism_group(5)[::7]:
        p = systole_permutation(g, model5)
        for j, s in enumerate(model5.systoles):
            assert act(g, s, 5) == model5.systoles[p[j]]


@given(st.lists(st.integers(0, 19), max_size=12, unique=True), st.integers(0, 319))
@settings(max_examples=60, deadline=None)
def test_canonical_form_is_orbit_invariant(subset, g):
    perms = group_table(5)
    image = [int(perms[g, j]) for j in subset]
    assert canonical_form(subset, perms) == canonical_form(image, perms)
    assert canonical_form(subset, perms) in orbit(subset, perms)


def test_orbit_size_divides_group_order(perms5):
    for subset in ([0], [0, 1], [0, 5, 9], list(range(8))):
        assert len(perms5) % len(orbit(subset, perms5)) == 0


def test_axis_class_stabiliser_acts_on_class(model5, perms5):
    members = axis_class(model5, 1)
    assert len(members) == 4
    stab = setwise_stabilizer(perms5, members)
    local = restrict(stab, members)
    assert local.shape[1] == 4
    assert all(sorted(r) == [0, 1, 2, 3] for r in local)


def brute_orbit_count(local, max_size):
    k = local.shape[1]
    seen, count = set(), 0
    for size in range(max_size + 1):
        for sub in itertools.combinations(range(k), size):
            if sub in seen:
                continue
            count += 1
            for row in local:
                seen.add(tuple(sorted(int(row[i]) for i in sub)))
    return count


@pytest.mark.parametrize("m", [5, 6])
def test_orbit_representatives_match_brute_force(m):
    model = build_surface(m)
    perms = group_table(m)
    members = axis_class(model, 1)
    local = restrict(setwise_stabilizer(perms, members), members)
    for size in range(len(members) + 1):
        reps = subset_orbit_representatives(local, size)
        assert len(reps) == brute_orbit_count(local, size) == orbit_count_burnside(local, size)


def test_923_orbits_at_m7():
    perms = group_table(7)
    members = axis_class(build_surface(7), 1)
    local = restrict(setwise_stabilizer(perms, members), members)
    assert len(subset_orbit_representatives(local, 7)) == 923
    assert orbit_count_burnside(local, 7) == 923
