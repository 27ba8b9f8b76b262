import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_balls, cloud, grid_sets, lattice
from dyadic_haar.grid import build_grid
from dyadic_haar.maximal import (compare_maximal, dyadic_maximal, dyadic_strong_maximal,
                                 forward_constant, hl_maximal, strong_maximal)
from dyadic_haar.space import PointMassMeasure, load_space


def brute_max(sets, mass, f):
    out = np.zeros(len(f))
    for b in sets:
        avg = (np.abs(f[b]) @ mass[b]) / mass[b].sum()
        out[b] = np.maximum(out[b], avg)
    return out


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 14), st.integers(0, 10_000))
def test_ball_maximal_matches_enumeration(n, seed):
    sp, m = cloud(n, seed)
    f = np.random.default_rng(seed).normal(size=sp.n)
    assert np.allclose(hl_maximal(sp, m, f), brute_max(all_balls(sp, m.mass), m.mass, f), atol=1e-13)


def test_ball_maximal_zero_masses():
    sp = load_space({"points": [[0.0], [1.0], [2.0]], "metric": "euclidean"})
    m = PointMassMeasure(np.array([0.0, 1.0, 0.0]))
    f = np.array([100.0, 2.0, -50.0])
    # every ball of positive mass contains point 1, whose value dominates the average
    assert np.allclose(hl_maximal(sp, m, f), [2.0, 2.0, 2.0])


@pytest.mark.parametrize("seed", range(4))
def test_dyadic_maximal_matches_enumeration(seed):
    sp, m = cloud(40, seed)
    g = build_grid(sp, m, 0.5, seed=seed)
    f = np.random.default_rng(seed).normal(size=(sp.n, 3))
    got = dyadic_maximal(g, m, f)
    for j in range(3):
        assert np.allclose(got[:, j], brute_max(grid_sets(g), m.mass, f[:, j]))


def test_lattice_indicator_example():
    sp, m, g = lattice(4)
    f = np.array([1.0, 0.0, 0.0, 0.0])
    assert np.allclose(dyadic_maximal(g, m, f), [1.0, 0.5, 0.25, 0.25])
    assert np.allclose(hl_maximal(sp, m, f), [1.0, 0.5, 1 / 3, 0.25])


def test_strong_maximal_matches_enumeration():
    s1, m1 = cloud(5, 1)
    s2, m2 = cloud(4, 2)
    F = np.random.default_rng(3).normal(size=(s1.n, s2.n))
    B1, B2 = all_balls(s1, m1.mass), all_balls(s2, m2.mass)
    ref = np.zeros(F.shape)
    for b1, b2 in itertools.product(B1, B2):
        w = np.outer(m1.mass * b1, m2.mass * b2)
        avg = (np.abs(F) * w).sum() / w.sum()
        ref[np.ix_(b1, b2)] = np.maximum(ref[np.ix_(b1, b2)], avg)
    assert np.allclose(strong_maximal(s1, m1, s2, m2, F), ref)
    g1, g2 = build_grid(s1, m1, 0.5), build_grid(s2, m2, 0.5)
    Q1, Q2 = grid_sets(g1), grid_sets(g2)
    ref = np.zeros(F.shape)
    for b1, b2 in itertools.product(Q1, Q2):
        w = np.outer(m1.mass * b1, m2.mass * b2)
        avg = (np.abs(F) * w).sum() / w.sum()
        ref[np.ix_(b1, b2)] = np.maximum(ref[np.ix_(b1, b2)], avg)
    assert np.allclose(dyadic_strong_maximal(g1, g2, F), ref)
    with pytest.raises(ValueError):
        strong_maximal(s1, m1, s2, m2, F.T)


def test_forward_constant_formula():
    assert forward_constant(3.0, 0.25, 1.0) == pytest.approx(3.0 ** 3)


@pytest.mark.parametrize("seed", range(3))
def test_comparison_on_clouds(seed):
    sp, m = cloud(60, seed)
    grids = [build_grid(sp, m, 0.5, seed=seed + t) for t in range(3)]
    F = np.random.default_rng(seed).normal(size=(sp.n, 10))
    r = compare_maximal(grids, sp, m, F)
    assert r.forward_ok and r.reverse_ok
    assert all(fr <= cs for fr, cs in zip(r.forward_ratio, r.C_star))
    assert np.isfinite(r.C_prime) and r.C_prime >= 1.0
    assert r.M.shape == F.shape
