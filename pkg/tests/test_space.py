import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadic_haar.space import (BallIndex, PointMassMeasure, SpaceError, ball, doubling_ratio,
                               geometric_doubling_constant, load_space, make_space,
                               quasi_triangle_constant)


def brute_A0(D):
    n = len(D)
    best = 1.0
    for x, y, z in itertools.product(range(n), repeat=3):
        s = D[x, z] + D[z, y]
        if s > 0:
            best = max(best, D[x, y] / s)
    return best


def brute_doubling(D, m):
    """Ratio over a dense radius grid including every distance, midpoints
    and points just to the right of each distance."""
    d = np.unique(D)
    d = d[d > 0]
    radii = np.unique(np.concatenate([d, d / 2, d * (1 + 1e-9), d / 2 * (1 + 1e-9),
                                      0.5 * (d[1:] + d[:-1])]))
    best = 0.0
    for x in range(len(D)):
        for r in radii:
            den = m[D[x] < r].sum()
            if den > 0:
                best = max(best, m[D[x] < 2 * r].sum() / den)
    return best


def test_squared_distance_triangle_constant():
    sp = load_space({"points": [[0.0], [1.0], [2.0]], "metric": "euclidean", "exponent": 2})
    assert sp.A0 == pytest.approx(2.0)
    assert quasi_triangle_constant(sp.dist)[1] is not None


def test_metric_recipes_have_unit_constant():
    rng = np.random.default_rng(3)
    pts = rng.random((20, 2))
    for metric in ("euclidean", "max"):
        sp = load_space({"points": pts.tolist(), "metric": metric})
        assert sp.A0 == 1.0
        assert brute_A0(sp.dist) <= 1.0 + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 9), st.integers(0, 10_000), st.floats(0.5, 3.0))
def test_triangle_constant_matches_triple_scan(n, seed, power):
    pts = np.random.default_rng(seed).random((n, 2))
    D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)) ** power
    if np.any((D == 0) & ~np.eye(n, dtype=bool)):
        return
    assert make_space(D).A0 == pytest.approx(brute_A0(D), rel=1e-12)


@pytest.mark.parametrize("bad, msg", [
    (np.array([[0, 1], [2, 0]], float), "asymmetric"),
    (np.array([[0, -1], [-1, 0]], float), "negative"),
    (np.array([[0, 0], [0, 0]], float), "zero distance"),
    (np.array([[1, 1], [1, 0]], float), "self-distance"),
    (np.array([[0, np.inf], [np.inf, 0]]), "non-finite"),
    (np.zeros((2, 3)), "square"),
])
def test_invalid_matrices_rejected(bad, msg):
    with pytest.raises(SpaceError, match=msg):
        make_space(bad)


def test_measure_rejects_negative_mass():
    with pytest.raises(ValueError):
        PointMassMeasure(np.array([1.0, -1.0]))


def test_ball_is_open():
    sp = load_space({"points": [[0.0], [1.0], [2.0], [3.0]], "metric": "euclidean"})
    assert ball(sp, 0, 1.0).tolist() == [0]
    assert ball(sp, 0, 1.0 + 1e-12).tolist() == [0, 1]
    with pytest.raises(ValueError):
        ball(sp, 0, 0.0)
    with pytest.raises(IndexError):
        ball(sp, 7, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000), st.floats(0.01, 2.0))
def test_ball_index_matches_direct_membership(n, seed, r):
    pts = np.random.default_rng(seed).random((n, 2))
    sp = load_space({"points": pts.tolist(), "metric": "euclidean"})
    idx = BallIndex(sp)
    for x in range(n):
        assert sorted(idx.ball(x, r).tolist()) == np.flatnonzero(sp.dist[x] < r).tolist()


def test_ball_list_covers_every_distinct_ball():
    rng = np.random.default_rng(1)
    sp = load_space({"points": rng.random((10, 2)).tolist(), "metric": "euclidean"})
    idx = BallIndex(sp)
    c, L, _, _ = idx.ball_list()
    listed = {tuple(np.flatnonzero(row)) for row in idx.membership(c, L)}
    d = np.unique(sp.dist)
    brute = set()
    for x in range(sp.n):
        for r in np.concatenate([d[d > 0], [10.0]]):
            brute.add(tuple(np.flatnonzero(sp.dist[x] < r)))
    assert listed == brute


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 10), st.integers(0, 10_000))
def test_doubling_ratio_matches_radius_scan(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 1))
    if len(np.unique(pts)) < n:
        return
    sp = load_space({"points": pts.tolist(), "metric": "euclidean"})
    m = rng.uniform(0.1, 2.0, n)
    got, (x, r) = doubling_ratio(sp, m)
    assert got == pytest.approx(brute_doubling(sp.dist, m), rel=1e-12)
    assert m[sp.dist[x] < 2 * r].sum() / m[sp.dist[x] < r].sum() == pytest.approx(got)


def test_uniform_lattice_doubling():
    sp = load_space({"points": [[float(i)] for i in range(8)], "metric": "euclidean"})
    assert doubling_ratio(sp, np.ones(8))[0] == 3.0


def test_doubling_ratio_skips_zero_mass():
    sp = load_space({"points": [[0.0], [1.0]], "metric": "euclidean"})
    assert np.isnan(doubling_ratio(sp, np.zeros(2))[0])


def test_geometric_doubling_is_valid_cover_bound():
    sp = load_space({"points": [[float(i)] for i in range(8)], "metric": "euclidean"})
    res = geometric_doubling_constant(sp)
    assert res["A1"] == 3 and res["exhaustive"]
    x, r = res["witness"]
    # no two half-radius balls cover the witness ball
    target = set(np.flatnonzero(sp.dist[x] < r))
    halves = [set(np.flatnonzero(sp.dist[y] < r / 2)) for y in range(8)]
    assert not any(target <= a | b for a, b in itertools.combinations_with_replacement(halves, 2))


def test_load_space_matrix_and_labels():
    D = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    sp = load_space({"dist_matrix": D, "labels": ["a", "b", "c"]})
    assert sp.n == 3 and sp.labels == ("a", "b", "c") and sp.diameter == 2.0
    with pytest.raises(SpaceError):
        load_space({"metric": "matrix"})
    with pytest.raises(SpaceError):
        load_space({"points": [[0.0], [1.0]], "metric": "taxicab"})
