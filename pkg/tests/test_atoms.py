import dataclasses

import numpy as np
import pytest

from conftest import cloud, lattice
from dyadic_haar.atoms import (ENLARGEMENTS, atomic_decompose, enlarged_set, maximal_rectangles,
                               structure_check, validate_atom)
from dyadic_haar.grid import build_grid
from dyadic_haar.maximal import dyadic_strong_maximal, strong_maximal
from dyadic_haar.product import ProductGrid, projection, product_analyze


def lattice_product():
    _, _, g1 = lattice(8)
    _, _, g2 = lattice(8)
    return ProductGrid.from_grids(g1, g2)


@pytest.mark.parametrize("mode", ENLARGEMENTS)
def test_atoms_valid_in_every_mode(mode):
    P = lattice_product()
    rng = np.random.default_rng(1)
    for _ in range(5):
        F = rng.normal(size=P.shape)
        dec = atomic_decompose(P, F, 0.25, mode)
        assert dec.reconstruction_error < 1e-8
        assert dec.support_failures == 0
        for a in dec.atoms:
            rep = validate_atom(P, a)
            assert rep["pass"], rep["checks"]
        assert dec.lambda_sum == pytest.approx(sum(abs(a.lam) for a in dec.atoms))


def test_atoms_on_skewed_cloud_product():
    s1, m1 = cloud(10, 3)
    s2, m2 = cloud(7, 4)
    P = ProductGrid.from_grids(build_grid(s1, m1, 0.5), build_grid(s2, m2, 0.5))
    F = np.random.default_rng(3).standard_cauchy(size=P.shape)
    dec = atomic_decompose(P, F)
    assert dec.reconstruction_error <= 1e-8 * max(1.0, np.abs(F).max())
    assert all(validate_atom(P, a)["pass"] for a in dec.atoms)


def test_enlarged_sets_contain_omega_and_match_maximal_functions():
    P = lattice_product()
    omega = np.zeros(P.shape, bool)
    omega[:2, 3:6] = True
    g1, g2 = P.basis1.grid, P.basis2.grid
    strong = enlarged_set(P, omega, 0.25, "strong")
    ref = strong_maximal(g1.space, g1.measure, g2.space, g2.measure, omega.astype(float)) > 0.25
    assert np.array_equal(strong, ref | omega)
    dyadic = enlarged_set(P, omega, 0.25, "dyadic")
    assert np.array_equal(dyadic, (dyadic_strong_maximal(g1, g2, omega.astype(float)) > 0.25) | omega)
    assert np.all(enlarged_set(P, omega, 0.25, "union") >= omega)
    with pytest.raises(ValueError):
        enlarged_set(P, omega, 0.25, "nope")


def test_maximal_rectangles_are_maximal():
    P = lattice_product()
    omega = np.zeros(P.shape, bool)
    omega[:4, :4] = True
    omega[4:6, :] = True
    keep, A1, A2 = maximal_rectangles(P, omega)
    assert keep
    rects = [np.outer(r1, r2) for r1 in A1 for r2 in A2]
    inside = [R for R in rects if not np.any(R & ~omega)]
    for i1, i2 in keep:
        R = np.outer(A1[i1], A2[i2])
        assert not np.any(R & ~omega)
        assert not any(np.all(S >= R) and np.any(S & ~R) for S in inside)
    # every inside rectangle lies in a kept one
    kept = [np.outer(A1[i1], A2[i2]) for i1, i2 in keep]
    assert all(any(np.all(K >= R) for K in kept) for R in inside)


def test_validate_atom_detects_faults():
    P = lattice_product()
    dec = atomic_decompose(P, np.random.default_rng(5).normal(size=P.shape))
    atom = max(dec.atoms, key=lambda a: (~a.omega).sum())
    broken = dataclasses.replace(atom, values=atom.values + 1.0 * ~atom.omega)
    rep = validate_atom(P, broken)
    assert not rep["checks"]["support"]["pass"]
    scaled = dataclasses.replace(atom, values=atom.values * 10,
                                 pieces=[dataclasses.replace(p, values=p.values * 10) for p in atom.pieces])
    rep = validate_atom(P, scaled)
    assert not rep["checks"]["l2_size"]["pass"]


def test_zero_signal_has_no_atoms():
    P = lattice_product()
    dec = atomic_decompose(P, np.zeros(P.shape))
    assert dec.atoms == [] and dec.lambda_sum == 0.0


def test_structure_check_reconstructs():
    s1, m1 = cloud(10, 1)
    s2, m2 = cloud(8, 2)
    G1 = [build_grid(s1, m1, 0.5, seed=t) for t in range(2)]
    G2 = [build_grid(s2, m2, 0.5, seed=t) for t in range(2)]
    F = np.random.default_rng(0).normal(size=(s1.n, s2.n))
    res = structure_check(G1, G2, F)
    assert res["reconstruction_error"] < 1e-8 or res["unassignable"]
    assert set(res["bmo"]) == {"0,0", "0,1", "1,0", "1,1"}
    assert res["bmo_min"] <= res["bmo_max"]
    P = ProductGrid.from_grids(G1[0], G2[0])
    assert res["reference_h1"] > 0
    assert np.isfinite(res["part_norm_sum"])
    assert np.abs(projection(P, product_analyze(P, F))).max() > 0
