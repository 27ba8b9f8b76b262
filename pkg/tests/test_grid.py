import copy

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cloud, lattice
from dyadic_haar import corpus
from dyadic_haar.grid import (DyadicGrid, GridError, build_adjacent_systems, build_grid,
                              sandwich_balls, sandwich_level, sandwich_search, verify_grid,
                              verify_sandwich)
from dyadic_haar.space import PointMassMeasure, load_space


def brute_constants(grid):
    """Largest inner constant and smallest admissible outer reach ratio,
    from the definition of the two inclusions."""
    D = grid.space.dist
    c1, reach = np.inf, 0.0
    for k in grid.ks:
        s = grid.delta ** k
        for cube in grid.cubes(k):
            x = cube.center
            outside = np.setdiff1d(np.arange(grid.space.n), cube.members)
            if outside.size:
                c1 = min(c1, D[x, outside].min() / s)
            reach = max(reach, D[x, cube.members].max() / s)
    return c1, reach


def test_binary_lattice_blocks():
    sp, m, g = lattice(8)
    for j, k in enumerate(g.ks):
        size = 8 // 2 ** j
        blocks = [list(range(b * size, (b + 1) * size)) for b in range(2 ** j)]
        assert [c.members.tolist() for c in g.cubes(k)] == blocks
    assert verify_grid(g)["pass"]


@pytest.mark.parametrize("n", [8, 64, 1024])
def test_binary_lattice_constants(n):
    sp, m, g = lattice(n)
    c1, reach = brute_constants(g)
    # left-end centres: the inner ball at the finest non-singleton level is tiny
    assert g.c1 == pytest.approx(2.0 / n) == pytest.approx(c1)
    assert reach < g.C1 <= 1.0


@pytest.mark.parametrize("seed", range(6))
def test_random_cloud_grid_passes_and_constants_are_tight(seed):
    sp, m = cloud(120, seed)
    g = build_grid(sp, m, 0.5, seed=seed)
    rep = verify_grid(g)
    assert rep["pass"], rep["checks"]
    c1, reach = brute_constants(g)
    assert g.c1 == pytest.approx(c1, rel=1e-12)
    assert reach < g.C1
    assert g.is_whole_space(0) and g.is_singletons(g.nlevels - 1)


def test_outer_balls_nest():
    sp, m = cloud(80, 11)
    g = build_grid(sp, m, 0.4, seed=2)
    D = sp.dist
    for i in range(1, g.nlevels):
        k = g.kmin + i
        for a, p in enumerate(g.parents[i]):
            x, y = g.centers[i][a], g.centers[i - 1][p]
            child = D[x] < g.C1 * g.delta ** k
            parent = D[y] < g.C1 * g.delta ** (k - 1)
            assert not np.any(child & ~parent)


@settings(max_examples=15, deadline=None)
@given(st.integers(5, 60), st.integers(0, 10_000), st.sampled_from([0.3, 0.5, 0.7]))
def test_grid_axioms_property(n, seed, delta):
    sp, m = cloud(n, seed)
    g = build_grid(sp, m, delta, seed=seed)
    rep = verify_grid(g)
    assert rep["pass"], rep["checks"]
    for k in g.ks:
        cover = np.concatenate([c.members for c in g.cubes(k)])
        assert sorted(cover.tolist()) == list(range(sp.n))


def test_distinguished_center_kept_at_every_level():
    sp, m = cloud(100, 5)
    g = build_grid(sp, m, 0.5, seed=1, distinguished_center=17)
    assert all(17 in set(c.tolist()) for c in g.centers)
    assert verify_grid(g)["checks"]["distinguished_center"]["pass"]


def test_triadic_middle_thirds():
    src, mass, ex = corpus.triadic(81)
    sp, m = load_space(src), PointMassMeasure(mass)
    g = build_grid(sp, m, ex["delta"], (ex["kmin"], 0), centers=ex["centers"],
                   distinguished_center=ex["distinguished_center"])
    assert verify_grid(g)["pass"]
    for j, k in enumerate(g.ks):
        size = 81 // 3 ** j
        cube = g.cube(k, g.containing_cube(40, k))
        assert cube.center == 40
        lo = 40 - size // 2
        assert cube.members.tolist() == list(range(lo, lo + size))


def test_isolated_point_stays_alone():
    src, mass, ex = corpus.isolated_point(33)
    sp, m = load_space(src), PointMassMeasure(mass)
    g = build_grid(sp, m, 0.5)
    far = ex["isolated"]
    for i in range(1, g.nlevels):
        a = g.labels[i][far]
        assert g.members[i][a].tolist() == [far]


def test_fixed_centers_validated():
    sp, m, g = lattice(8)
    cen = [list(range(0, 8, 2 ** (3 - j))) for j in range(4)]
    bad = copy.deepcopy(cen)
    bad[2] = [0, 2, 4]   # point 7 too far
    with pytest.raises(GridError, match="not within"):
        build_grid(sp, m, 0.5, (-3, 0), centers=bad)
    bad = copy.deepcopy(cen)
    bad[2] = [0, 1, 4, 6]
    with pytest.raises(GridError, match="closer"):
        build_grid(sp, m, 0.5, (-3, 0), centers=bad)
    bad = copy.deepcopy(cen)
    bad[1] = [0, 5]
    with pytest.raises(GridError, match="contain"):
        build_grid(sp, m, 0.5, (-3, 0), centers=bad)


def test_build_errors_and_strict_warning():
    sp, m = cloud(20, 0)
    with pytest.raises(GridError):
        build_grid(sp, m, 1.5)
    with pytest.raises(GridError):
        build_grid(sp, m, 0.5, (2, 1))
    g = build_grid(sp, m, 0.5, strict=True)
    assert g.warnings and g.warnings[0].required == pytest.approx(1 / 12)
    assert verify_grid(g)["pass"]


def test_serialization_round_trip():
    sp, m = cloud(50, 4)
    g = build_grid(sp, m, 0.5, seed=3)
    h = DyadicGrid.from_dict(g.to_dict(), sp, m)
    assert h.to_dict() == g.to_dict()
    assert (h.c1, h.C1) == (g.c1, g.C1)


@pytest.mark.parametrize("fault, check", [
    ("duplicate", "partition"),
    ("move", "nested"),
    ("parent", "unique_ancestor"),
])
def test_corrupted_grid_reports_witness(fault, check):
    sp, m, g = lattice(8)
    d = g.to_dict()
    lv = d["levels"]
    if fault == "duplicate":
        lv[2]["cubes"][0]["members"].append(5)
    elif fault == "move":
        # move point 3 between siblings at the finest non-singleton level
        lv[2]["cubes"][1]["members"].remove(3)
        lv[2]["cubes"][2]["members"].append(3)
    else:
        lv[3]["cubes"][0]["parent"] = 3
    bad = DyadicGrid.from_dict(d, sp, m)
    rep = verify_grid(bad)
    assert not rep["pass"]
    assert not rep["checks"][check]["pass"]
    assert any(c["witness"] for c in rep["checks"].values() if not c["pass"])


def brute_sandwich(grids, space, x, r):
    """Smallest C over cubes at the admissible level with B(x, r) in Q in
    the open ball of radius C r (infimum form)."""
    D = space.dist
    B = set(np.flatnonzero(D[x] < r))
    best = np.inf
    for g in grids:
        k = int(sandwich_level(r, g.delta))
        i = k - g.kmin
        if 0 <= i < g.nlevels:
            Q = set(g.members[i][g.labels[i][x]].tolist())
        elif i < 0 and g.is_whole_space(0):
            Q = set(range(space.n))
        elif i >= g.nlevels and g.is_singletons(g.nlevels - 1):
            Q = {x}
        else:
            continue
        if B <= Q:
            best = min(best, max(1.0, max(D[x, q] for q in Q) / r))
    return best


def test_sandwich_levels():
    for delta in (0.5, 1 / 3):
        for r in np.geomspace(1e-3, 10, 200):
            k = int(sandwich_level(r, delta))
            assert delta ** (k + 3) < r <= delta ** (k + 2) * (1 + 1e-12)


def test_sandwich_search_matches_brute_force():
    sp, m = cloud(30, 8)
    grids = [build_grid(sp, m, 0.5, seed=s) for s in range(3)]
    centers, radii = sandwich_balls(sp)
    C, t, lev, ok = sandwich_search(grids, sp, centers, radii)
    for j in range(0, len(radii), 7):
        assert C[j] == pytest.approx(brute_sandwich(grids, sp, centers[j], radii[j]))


def test_single_lattice_system_has_sandwich_failures():
    sp, m, g = lattice(16)
    rep = verify_sandwich([g], sp)
    assert rep["n_failures"] > 0 and 0 < rep["success_rate"] < 1
    f = rep["failures"][0]
    assert brute_sandwich([g], sp, f["center"], f["r"]) == np.inf


def test_adjacent_systems_report():
    sp, m = cloud(60, 2)
    adj = build_adjacent_systems(sp, m, 0.5, T=3, seed=4)
    assert len(adj.grids) == 3
    assert all(verify_grid(g)["pass"] for g in adj.grids)
    assert adj.report["success_rate"] >= verify_sandwich(adj.grids[:1], sp)["success_rate"]
    assert np.isfinite(adj.C_sandwich)
    with pytest.raises(ValueError):
        build_adjacent_systems(sp, m, T=0)


def test_build_is_deterministic():
    sp, m = cloud(70, 9)
    a = build_grid(sp, m, 0.5, seed=5).to_dict()
    b = build_grid(sp, m, 0.5, seed=5).to_dict()
    assert a == b
