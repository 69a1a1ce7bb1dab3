"""One check per acceptance criterion; lines are printed in the terminal summary."""

import io
import itertools
import json
import math

import numpy as np
import pytest

from systolic.cli import EXIT_OK, EXIT_TIMEOUT, main
from systolic.filling import RegionCounter, is_minimal_filling
from systolic.filling_search import (
    SearchOptions,
    max_minimal_filling,
    min_exhaustive,
    min_filling,
    optimal_classes,
)
from systolic.homology import build_combinatorial_map, homology_span_rank
from systolic.hyperbolic import (
    build_chart,
    check_eutactic,
    cut_to_polygon,
    holonomy_defect,
    index_formula,
    length_jacobian,
    numerical_rank,
    side_length,
    systole_lengths,
)
from systolic.surface import build_surface, incidence_matrices, intersects, systole_squares
from systolic.symmetry import (
    axis_class,
    canonical_form,
    group_table,
    orbit_count_burnside,
    restrict,
    setwise_stabilizer,
    subset_orbit_representatives,
)

TABLE = {5: (5, 20, 10, 12), 6: (17, 48, 31, 39), 7: (49, 112, 84, 102), 8: (129, 256, 210, 245)}


def test_criterion_1_combinatorics(criterion):
    got = {m: (build_surface(m).genus, build_surface(m).n) for m in TABLE}
    ok = all(got[m] == TABLE[m][:2] for m in TABLE)
    criterion("criterion 1 combinatorics", ok, f"(genus, systoles) = {got}")


def test_criterion_2_intersections(criterion):
    regular, totals, agree = True, {}, True
    for m in TABLE:
        model = build_surface(m)
        A, _ = incidence_matrices(model)
        regular &= bool((A.sum(axis=1) == 4).all())
        totals[m] = int(A.sum() // 2)
        if m <= 6:
            sq = [systole_squares(s, m) for s in model.systoles]
            for a, b in itertools.combinations(range(model.n), 2):
                agree &= intersects(model.systoles[a], model.systoles[b], m) == bool(sq[a] & sq[b])
    ok = regular and agree and all(totals[m] == 2 * TABLE[m][1] for m in TABLE)
    criterion("criterion 2 intersection structure", ok,
              f"4-regular={regular}, totals={totals}, rule==square-sharing (m<=6)={agree}")


def test_criterion_3_rank(criterion):
    got = {}
    for m in TABLE:
        model = build_surface(m)
        got[m] = homology_span_rank(range(model.n), build_combinatorial_map(model))
    criterion("criterion 3 homology rank", all(got[m] == TABLE[m][2] for m in TABLE), f"ranks = {got}")


def test_criterion_4_small_filling(criterion):
    model = build_surface(5)
    perms = group_table(5)
    low, ex_classes = min_exhaustive(model)
    ex_max = max_minimal_filling(model)
    ilp_min = min_filling(model)
    ilp_classes = optimal_classes(model, 8)
    ilp_max = max_minimal_filling(model, SearchOptions(exhaustive=False, time_limit=60, restarts=50))
    cmap = build_combinatorial_map(model)
    ok = (low == 8 and len(ex_classes) == 1 and ex_max.cardinality == 10 and ex_max.status == "exhaustive"
          and ilp_min.cardinality == 8 and ilp_min.proved_optimal
          and ilp_classes == ex_classes == [canonical_form(ilp_min.subset, perms)]
          and is_minimal_filling(ex_max.subset, cmap)
          and ilp_max.cardinality == 10 and is_minimal_filling(ilp_max.subset, cmap))
    criterion("criterion 4 minimal filling m=5", ok,
              f"exhaustive min={low} classes={len(ex_classes)} max={ex_max.cardinality}; "
              f"ILP min={ilp_min.cardinality} (proved={ilp_min.proved_optimal}) classes={len(ilp_classes)}; "
              f"ILP max path best={ilp_max.cardinality}")


@pytest.fixture(scope="module")
def max6():
    return max_minimal_filling(build_surface(6), SearchOptions(time_limit=300))


def test_criterion_5_min_and_classes(criterion):
    model = build_surface(6)
    res = min_filling(model)
    classes = optimal_classes(model, 24)
    counter = RegionCounter(model)
    all_minimal = all(counter.is_minimal(counter.mask(c)) for c in classes)
    formula = {m: (m - 3) * 2 ** (m - 3) for m in (5, 6)}
    ok = (res.cardinality == 24 and res.proved_optimal and len(classes) == 6 and all_minimal
          and formula == {5: 8, 6: 24})
    criterion("criterion 5a minimal filling m=6 (min, classes, formula)", ok,
              f"min={res.cardinality} proved={res.proved_optimal}, classes={len(classes)}, "
              f"(m-3)2^(m-3)={formula}")


def test_criterion_5_max_value(criterion, max6):
    model = build_surface(6)
    counter = RegionCounter(model)
    ok = max6.cardinality == 31 and counter.is_minimal(counter.mask(max6.subset))
    criterion("criterion 5b largest minimal filling m=6 value", ok,
              f"best minimal filling set found has {max6.cardinality} systoles")


@pytest.mark.xfail(reason="optimality of 31 at m=6 is not certified within the budget", strict=False)
def test_criterion_5_max_certified(criterion, max6):
    criterion("criterion 5c largest minimal filling m=6 certified", max6.proved_optimal,
              f"status={max6.status} after {max6.rounds} rounds, {max6.cuts_used} cuts")


def test_criterion_6_orbits(criterion):
    perms = group_table(7)
    members = axis_class(build_surface(7), 1)
    local = restrict(setwise_stabilizer(perms, members), members)
    n = len(subset_orbit_representatives(local, 7))
    burnside = orbit_count_burnside(local, 7)
    criterion("criterion 6 symmetry breaking m=7", n == burnside == 923,
              f"representatives={n}, Burnside count={burnside}; full m=7 certification is optional and not run")


@pytest.fixture(scope="module")
def chart5():
    model = build_surface(5)
    cmap = build_combinatorial_map(model)
    polygon = cut_to_polygon(min_filling(model).subset, cmap)
    return build_chart(polygon, cmap)


def test_criterion_7_closure(criterion, chart5):
    polygon = chart5.polygon
    defect = holonomy_defect(polygon)
    s = 2 * math.acosh(math.sqrt(2) * math.cos(math.pi / 5))
    err = float(np.abs(systole_lengths(chart5) - 4 * s).max())
    ok = defect < 1e-9 and err < 1e-8 and abs(side_length(5) - s) < 1e-15
    criterion("criterion 7 hyperbolic closure m=5", ok, f"defect={defect:.2e}, max |L-4s|={err:.2e}")


def test_criterion_8_dimensions(criterion, chart5):
    p = chart5.polygon
    got = (p.n_edges, p.n_pairs, p.M, p.n_parameters, chart5.dim)
    ok = got == (36, 18, 9, 24, 24) and 3 * p.M - 3 == 6 * 5 - 6
    criterion("criterion 8 chart dimensions m=5", ok, f"(edges, pairs, M, 3M-3, chart dim) = {got}")


def test_criterion_9_index(criterion, chart5):
    jac = length_jacobian(chart5, 1e-5)
    rep = numerical_rank(jac.matrix)
    sweep = {tau: numerical_rank(jac.matrix, tau).rank for tau in (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)}
    halved = numerical_rank(length_jacobian(chart5, 5e-6).matrix).rank
    eutactic = check_eutactic(jac)
    ok = (rep.rank == 12 == index_formula(5) and rep.gap > 1e3 and set(sweep.values()) == {12}
          and halved == 12 and eutactic)
    criterion("criterion 9 index m=5", ok,
              f"rank={rep.rank}, gap={rep.gap:.2e}, tau sweep={sorted(set(sweep.values()))}, "
              f"h/2 rank={halved}, eutactic={eutactic}")


def test_criterion_9_index_m6(criterion):
    model = build_surface(6)
    cmap = build_combinatorial_map(model)
    chart = build_chart(cut_to_polygon(min_filling(model).subset, cmap), cmap)
    jac = length_jacobian(chart, 1e-5)
    rep = numerical_rank(jac.matrix)
    ok = rep.rank == 39 == index_formula(6) and rep.gap > 1e3 and check_eutactic(jac)
    criterion("criterion 9 index m=6 (stretch)", ok,
              f"{jac.matrix.shape[0]}x{jac.matrix.shape[1]} Jacobian, rank={rep.rank}, gap={rep.gap:.2e}")


def test_criterion_10_determinism(criterion, tmp_path):
    runs = []
    for workers in (1, 3):
        out = io.StringIO()
        export = tmp_path / f"export{workers}"
        code = main(["table", "--m", "5", "--output", "json", "--threads", str(workers),
                     "--cache-dir", str(tmp_path / f"cache{workers}"), "--export", str(export)], out=out)
        assert code == EXIT_OK
        fill = io.StringIO()
        main(["filling", "max", "--m", "5", "--output", "json", "--no-cache"], out=fill)
        files = {p.name: p.read_bytes() for p in sorted(export.iterdir())}
        runs.append((out.getvalue(), fill.getvalue(), files))
    same = runs[0] == runs[1]
    row = json.loads(runs[0][0])["cells"]
    values = tuple(row[k]["value"] for k in ("m", "genus", "systoles", "min", "max", "rank", "index"))
    criterion("criterion 10 determinism", same and values == (5, 5, 20, 8, 10, 10, 12),
              f"two cold runs (1 and 3 workers) byte-identical={same}, files={sorted(runs[0][2])}")


def test_cli_examples(criterion, tmp_path):
    def run(*argv):
        out = io.StringIO()
        return main(list(argv) + ["--cache-dir", str(tmp_path)], out=out), out.getvalue().strip()

    t5 = run("table", "--m", "5")
    t6 = run("table", "--m", "6", "--skip", "index", "--time-limit", "120")
    orb = run("orbits", "--m", "7", "--max-size", "7")
    ok = (t5 == (EXIT_OK, "5,5,20,8,10,10,12") and t6[1] == "6,17,48,24,31,31,-"
          and t6[0] in (EXIT_OK, EXIT_TIMEOUT) and orb == (EXIT_OK, "923"))
    criterion("CLI table examples", ok, f"m=5 -> {t5}, m=6 -> {t6}, orbits -> {orb}")
