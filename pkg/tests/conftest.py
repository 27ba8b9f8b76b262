import numpy as np
import pytest

from dyadic_haar import corpus
from dyadic_haar.grid import build_grid
from dyadic_haar.space import PointMassMeasure, load_space, make_space

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[marker] = "PASS" if report.outcome == "passed" else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num:2d} {status}: {title}")


def lattice(n, masses=None):
    src, mass, extras = corpus.binary_lattice(n)
    space = load_space(src)
    measure = PointMassMeasure(mass if masses is None else np.asarray(masses, float))
    grid = build_grid(space, measure, 0.5, (extras["kmin"], 0), centers=extras["centers"])
    return space, measure, grid


def cloud(n, seed, dim=2):
    pts, mass = corpus.random_cloud(n, seed, dim)
    space = make_space(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)), coords=pts, known_metric=True)
    return space, PointMassMeasure(mass)


@pytest.fixture
def lattice8():
    return lattice(8)


def all_balls(space, mass):
    """Membership masks of every open ball of positive mass."""
    D = space.dist
    radii = np.unique(np.concatenate([np.unique(D)[1:], [2 * space.diameter + 1]]))
    out = set()
    for x in range(space.n):
        for r in np.concatenate([radii, radii * (1 + 1e-9)]):
            b = D[x] < r
            if mass[b].sum() > 0:
                out.add(tuple(b))
    return [np.array(b) for b in out]


def grid_sets(grid):
    out = []
    for k in grid.ks:
        for c in grid.cubes(k):
            b = np.zeros(grid.space.n, bool)
            b[c.members] = True
            if grid.measure.mass[b].sum() > 0:
                out.append(b)
    return out
