import numpy as np
import pytest

from systolic.filling import RegionCounter
from systolic.filling_search import min_filling
from systolic.homology import build_combinatorial_map
from systolic.surface import build_surface
from systolic.symmetry import group_table


@pytest.fixture(scope="session")
def model5():
    return build_surface(5)


@pytest.fixture(scope="session")
def model6():
    return build_surface(6)


@pytest.fixture(scope="session")
def cmap5(model5):
    return build_combinatorial_map(model5)


@pytest.fixture(scope="session")
def cmap6(model6):
    return build_combinatorial_map(model6)


@pytest.fixture(scope="session")
def perms5():
    return group_table(5)


@pytest.fixture(scope="session")
def counter5(model5):
    return RegionCounter(model5)


@pytest.fixture(scope="session")
def min5(model5):
    return min_filling(model5)


@pytest.fixture(scope="session")
def filling5(model5):
    """Boolean filling flag for every subset mask of the 20 systoles at m = 5."""
    from systolic.exhaustive import filling_table

    return filling_table(model5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line, then assert it."""
    lines = request.config.stash[_LINES]

    def check(label, ok, detail):
        lines.append(f"{label}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"{label}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
