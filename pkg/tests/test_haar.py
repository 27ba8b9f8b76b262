import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cloud, lattice
from dyadic_haar import corpus
from dyadic_haar.grid import GridError, build_grid
from dyadic_haar.haar import (analyze, build_basis, conditional_expectation, gram_matrix,
                              martingale_difference, norm_bracket, order_children, synthesize,
                              tail_inequality_holds, validate_basis)
from dyadic_haar.space import PointMassMeasure, load_space


def textbook_haar(f):
    """Unnormalised-weight pyramid transform: details per level, coarse first."""
    a = np.asarray(f, float)
    out = []
    while a.size > 1:
        out.append((a[0::2] - a[1::2]) / np.sqrt(2.0))
        a = (a[0::2] + a[1::2]) / np.sqrt(2.0)
    return out[::-1]


def test_lattice_coefficients_match_textbook_transform():
    sp, m, g = lattice(64)
    basis = build_basis(g)
    f = np.random.default_rng(0).normal(size=64)
    c = analyze(basis, f)
    ref = textbook_haar(f)
    for (k, alpha, u), v in zip(c.keys, c.values):
        assert u == 1
        assert v == pytest.approx(ref[k - g.kmin][alpha], abs=1e-12)
    assert c.values.size == 63


def test_children_sorted_by_mass_then_index():
    sp, m, g = lattice(8, masses=[3, 1, 1, 1, 2, 2, 5, 1])
    od = order_children(g, g.kmin, 0)
    assert od.order == [0, 1]   # masses 6 and 10
    od = order_children(g, g.kmin + 1, 1)   # children {4, 5} and {6, 7}
    assert od.order == [2, 3]
    od = order_children(g, g.kmin + 2, 3)   # points 6 (mass 5) and 7 (mass 1)
    assert od.order == [7, 6]
    sp, m, g = lattice(8, masses=[1, 1, 1, 1, 2, 2, 5, 1])
    assert order_children(g, g.kmin, 0).order == [0, 1]
    with pytest.raises(GridError):
        order_children(g, g.kmax, 0)


def brute_function(grid, k, alpha, u):
    """Haar function from its defining formula with plain Python sums."""
    m = grid.measure.mass
    od = order_children(grid, k, alpha)
    i = grid.level(k) + 1
    child = grid.members[i][od.order[u - 1]]
    rest = np.concatenate([grid.members[i][c] for c in od.order[u:]])
    q, e_next = m[child].sum(), m[rest].sum()
    e_u = q + e_next
    h = np.zeros(grid.space.n)
    h[child] = np.sqrt(e_next / (q * e_u))
    h[rest] = -np.sqrt(q / (e_u * e_next))
    return h


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_functions_match_defining_formula(seed):
    sp, m = cloud(60, seed)
    g = build_grid(sp, m, 0.5, seed=seed)
    basis = build_basis(g)
    H = basis.matrix()
    for j, key in enumerate(basis.keys):
        assert np.allclose(H[j], brute_function(g, *key), atol=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 80), st.integers(0, 10_000), st.sampled_from([0.3, 0.5]))
def test_basis_is_orthonormal_and_complete(n, seed, delta):
    sp, m = cloud(n, seed)
    g = build_grid(sp, m, delta, seed=seed)
    basis = build_basis(g)
    G = gram_matrix(basis)
    assert G.shape == (sp.n, sp.n)
    assert np.abs(G - np.eye(sp.n)).max() < 1e-10
    rep = validate_basis(basis)
    assert rep["pass"], rep["failed"]


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 60), st.integers(0, 10_000))
def test_parseval_and_round_trip(n, seed):
    sp, m = cloud(n, seed)
    g = build_grid(sp, m, 0.5, seed=seed)
    basis = build_basis(g)
    f = np.random.default_rng(seed).normal(size=sp.n)
    c = analyze(basis, f)
    energy = (c.values ** 2).sum() + (c.coarse ** 2) @ g.masses(g.kmin)
    assert energy == pytest.approx(f ** 2 @ m.mass, rel=1e-10)
    assert np.abs(synthesize(basis, c) - f).max() < 1e-10


def test_martingale_difference_is_local_haar_projection():
    sp, m = cloud(50, 3)
    g = build_grid(sp, m, 0.5, seed=1)
    basis = build_basis(g)
    f = np.random.default_rng(7).normal(size=sp.n)
    c = analyze(basis, f).as_dict()
    for (k, alpha) in list(basis.orderings)[:20]:
        keys = [key for key in basis.keys if key[:2] == (k, alpha)]
        proj = sum((c[key] * basis.evaluate(key) for key in keys), np.zeros(sp.n))
        assert np.allclose(martingale_difference(g, m, f, (k, alpha)), proj, atol=1e-12)
    with pytest.raises(GridError):
        martingale_difference(g, m, f, (g.kmax, 0))


def test_conditional_expectation_brute():
    sp, m = cloud(40, 2)
    g = build_grid(sp, m, 0.5)
    f = np.arange(sp.n, dtype=float)
    for k in g.ks:
        e = conditional_expectation(g, m, f, k)
        for cube in g.cubes(k):
            w = m.mass[cube.members]
            assert np.allclose(e[cube.members], (f[cube.members] @ w) / w.sum())


def test_zero_mass_children_are_skipped():
    mass = np.ones(8)
    mass[[2, 3]] = 0.0
    sp, m, g = lattice(8, masses=mass)
    basis = build_basis(g)
    assert len(basis.keys) < 7
    rep = validate_basis(basis)
    assert rep["pass"], rep["failed"]
    f = np.random.default_rng(0).normal(size=8)
    rec = synthesize(basis, analyze(basis, f))
    pos = mass > 0
    assert np.allclose(rec[pos], f[pos])


def test_isolated_point_has_no_cancellative_functions_below_isolation():
    src, mass, ex = corpus.isolated_point(33)
    sp, m = load_space(src), PointMassMeasure(mass)
    g = build_grid(sp, m, 0.5)
    basis = build_basis(g)
    far = ex["isolated"]
    for (k, alpha, u) in basis.keys:
        cube = g.members[g.level(k)][alpha]
        if far in cube:
            assert k == g.kmin
    # the only-child chain has one child per cube and no orderings
    for i in range(1, g.nlevels - 1):
        assert len(g.children[i][g.labels[i][far]]) == 1


def test_tail_inequality_exact_and_detects_wrong_order():
    sp, m = cloud(100, 5)
    g = build_grid(sp, m, 0.5)
    basis = build_basis(g)
    assert all(tail_inequality_holds(od) for od in basis.orderings.values())
    od = max(basis.orderings.values(), key=lambda o: np.ptp(o.masses))
    od.masses = od.masses[::-1].copy()
    assert not tail_inequality_holds(od)


def test_norm_bracket_covers_extreme_splits():
    # two children with mass ratio theta : 1 - theta
    for M in (2, 3, 8):
        c = norm_bracket(M)
        for theta in np.linspace(1.0 / M, 1.0 - 1e-9, 50):
            q, e = 1 - theta, theta
            a, b = np.sqrt(e / q), np.sqrt(q / e)
            for p in (1.0, 2.0, 4.0):
                r = (q * a ** p + e * b ** p) ** (1 / p) / q ** (1 / p - 0.5)
                assert 1 / c <= r <= c
            prod = (q * a + e * b) * max(a, b)
            assert 1 / c <= prod <= c


def test_synthesize_rejects_unknown_keys():
    sp, m, g = lattice(8)
    basis = build_basis(g)
    with pytest.raises(KeyError):
        synthesize(basis, {(99, 0, 1): 1.0})
    with pytest.raises(ValueError):
        synthesize(basis, np.ones(3))
    with pytest.raises(ValueError):
        analyze(basis, np.ones(5))


def test_dict_synthesis_matches_array():
    sp, m = cloud(30, 1)
    g = build_grid(sp, m, 0.5)
    basis = build_basis(g)
    c = analyze(basis, np.random.default_rng(1).normal(size=sp.n))
    a = synthesize(basis, c.as_dict(), coarse=c.coarse)
    assert np.allclose(a, synthesize(basis, c))
