import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systolic.exact import RationalEchelon, dense_rank, rank_of
from systolic.homology import (
    apply_boundary1,
    build_combinatorial_map,
    first_betti,
    homology_span_rank,
    systole_cycle_vector,
)
from systolic.surface import build_surface


def dense(vectors, size):
    out = np.zeros((len(vectors), size))
    for r, v in enumerate(vectors):
        for k, x in v.items():
            out[r, k] = x
    return out


@pytest.mark.parametrize("m,rank", [(5, 10), (6, 31), (7, 84), (8, 210)])
def test_span_rank(m, rank):
    model = build_surface(m)
    assert homology_span_rank(range(model.n), build_combinatorial_map(model)) == rank


@pytest.mark.parametrize("m", [5, 6])
def test_span_rank_against_float_rank(m):
    model = build_surface(m)
    cmap = build_combinatorial_map(model)
    n_sides = len(model.sides)
    B = dense(cmap.boundary2, n_sides)
    Z = dense([systole_cycle_vector(j, cmap) for j in range(model.n)], n_sides)
    expect = np.linalg.matrix_rank(np.vstack([B, Z])) - np.linalg.matrix_rank(B)
    assert homology_span_rank(range(model.n), cmap) == expect


@pytest.mark.parametrize("m", [5, 6, 7])
def test_map_is_the_right_surface(m):
    model = build_surface(m)
    cmap = build_combinatorial_map(model)
    rot = cmap.vertex_rotation
    seen = np.zeros(cmap.n_darts, dtype=bool)
    lengths = []
    for d in range(cmap.n_darts):
        size = 0
        while not seen[d]:
            seen[d] = True
            d = rot[d]
            size += 1
        if size:
            lengths.append(size)
    # corners of the map are the realised squares, each of valency 4
    assert set(lengths) == {4} and len(lengths) == len(model.squares)
    n_faces = len(cmap.faces())
    assert len(lengths) - cmap.n_darts // 2 + n_faces == 2 - 2 * model.genus
    assert cmap.euler_characteristic() == 2 - 2 * model.genus
    assert first_betti(cmap) == 2 * model.genus


def test_systoles_are_cycles(cmap5, model5):
    for j in range(model5.n):
        z = systole_cycle_vector(j, cmap5)
        assert len(z) == 4
        assert not any(apply_boundary1(cmap5, z).values())


def test_reversed_cycle_is_negated(cmap5):
    z, w = systole_cycle_vector(3, cmap5), systole_cycle_vector(3, cmap5, reverse=True)
    assert {k: -v for k, v in z.items()} == w


def test_single_and_disjoint_systoles(cmap5, model5):
    assert homology_span_rank([0], cmap5) == 1
    assert homology_span_rank([], cmap5) == 0


def test_map_permutations(cmap5):
    n = cmap5.n_darts
    assert sorted(cmap5.face_next) == list(range(n))
    assert (cmap5.opposite[cmap5.opposite] == np.arange(n)).all()
    assert (cmap5.opposite != np.arange(n)).all()


small_matrix = st.lists(st.lists(st.integers(-3, 3), min_size=5, max_size=5), min_size=1, max_size=7)


@given(small_matrix)
@settings(max_examples=80, deadline=None)
def test_rational_rank_matches_numpy(rows):
    assert dense_rank(rows) == np.linalg.matrix_rank(np.array(rows, dtype=float))
    vecs = [{k: x for k, x in enumerate(r) if x} for r in rows]
    assert rank_of(vecs) == np.linalg.matrix_rank(np.array(rows, dtype=float))


def test_echelon_reduce_detects_membership():
    ech = RationalEchelon()
    assert ech.add({0: 2, 1: 4})
    assert ech.add({1: 3, 2: 1})
    assert not ech.add({0: 1, 1: 5, 2: 1})  # (1/2) v1 + v2
    assert not ech.reduce({0: 2, 1: 7, 2: 1})
    assert ech.reduce({2: 1})
    assert ech.rank == 2
