"""Atomic decomposition of product signals and the multi-system harness.

Rectangles are grouped by the level sets ``Omega_k = {S > 2**k}`` of the
square function: ``R`` joins ``B_k`` when more than half of it lies in
``Omega_k`` but at most half lies in ``Omega_{k+1}``.  Each group gives one
atom supported on an enlargement ``Omega~_k`` of ``Omega_k``, split into
pieces over the maximal dyadic rectangles inside ``Omega~_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .haar import build_basis
from .maximal import ball_family, cube_family, rectangle_maximal
from .product import (CoefficientTensor, ProductGrid, bmodd_functional, h1dd_norm,
                      product_analyze, projection, square_function)

ENLARGEMENTS = ("strong", "dyadic", "union")


@dataclass
class AtomPiece:
    rect: tuple
    mask: np.ndarray
    values: np.ndarray
    members: list


@dataclass
class Atom:
    k: int
    lam: float
    omega: np.ndarray
    values: np.ndarray
    pieces: list
    rects: list = field(default_factory=list)


@dataclass
class AtomicDecomposition:
    atoms: list
    reconstruction_error: float
    lambda_sum: float
    h1_norm: float
    ratio: float
    enlargement: str
    ctilde: float
    support_failures: int = 0


def enlarged_set(product: ProductGrid, omega, ctilde=0.25, mode="strong", families=None):
    """``{M chi_omega > ctilde}`` for the strong (ball) maximal function,
    its dyadic counterpart, or the union of both level sets."""
    if mode not in ENLARGEMENTS:
        raise ValueError(f"unknown enlargement {mode!r}")
    g1, g2 = product.basis1.grid, product.basis2.grid
    chi = np.asarray(omega, float)
    fam = families or _families(product)
    out = np.zeros(product.shape, bool)
    if mode in ("strong", "union"):
        A1, A2 = fam["balls"]
        out |= rectangle_maximal(A1, g1.measure.mass, A2, g2.measure.mass, chi) > ctilde
    if mode in ("dyadic", "union"):
        A1, A2 = fam["cubes"]
        out |= rectangle_maximal(A1, g1.measure.mass, A2, g2.measure.mass, chi) > ctilde
    return out


def _families(product):
    g1, g2 = product.basis1.grid, product.basis2.grid
    return {"balls": (ball_family(g1.space, g1.measure), ball_family(g2.space, g2.measure)),
            "cubes": (cube_family(g1), cube_family(g2))}


def maximal_rectangles(product: ProductGrid, omega):
    """Maximal dyadic rectangles (as distinct point sets) inside ``omega``.

    Returns a list of ``(cube1_row, cube2_row)`` index pairs into the
    factors' cube families and the families themselves.
    """
    A1 = cube_family(product.basis1.grid)
    A2 = cube_family(product.basis2.grid)
    outside = (~np.asarray(omega, bool)).astype(float)
    inside = (A1.astype(float) @ outside @ A2.astype(float).T) == 0
    s1, s2 = A1.sum(axis=1), A2.sum(axis=1)
    # cube containment within each factor
    sub1 = (A1.astype(int) @ (~A1).astype(int).T) == 0
    sub2 = (A2.astype(int) @ (~A2).astype(int).T) == 0
    cands = np.argwhere(inside)
    keep = []
    for i1, i2 in cands:
        # rectangle is maximal if no strictly larger inside rectangle contains it
        sup1 = np.flatnonzero(sub1[i1])
        sup2 = np.flatnonzero(sub2[i2])
        bigger = inside[np.ix_(sup1, sup2)]
        strictly = (s1[sup1][:, None] * s2[sup2][None, :]) > s1[i1] * s2[i2]
        if not np.any(bigger & strictly):
            keep.append((int(i1), int(i2)))
    return keep, A1, A2


def atomic_decompose(product: ProductGrid, f, ctilde: float = 0.25, enlargement: str = "strong",
                     tensor: CoefficientTensor | None = None) -> AtomicDecomposition:
    """Split the cancellative part of ``f`` into atoms, one per level group."""
    if tensor is None:
        tensor = product_analyze(product, f)
    C = tensor.values
    S = square_function(product, tensor)
    energy = product.rect_energy(C)
    rm = product.rect_mass()
    F1, F2 = product.f1, product.f2
    fam = _families(product)
    atoms, norm = [], float((S * product.mass).sum())
    pos = S[S > 0]
    support_failures = 0
    if pos.size:
        k_lo = int(np.floor(np.log2(pos.min()))) - 1
        k_hi = int(np.floor(np.log2(pos.max()))) + 1
        A1f, A2f = F1.A.astype(float), F2.A.astype(float)
        half = 0.5 * rm
        live = energy > 0
        cover = {}
        for k in range(k_lo, k_hi + 2):
            om = S > 2.0 ** k
            cover[k] = A1f @ (om * product.mass) @ A2f.T
        for k in range(k_lo, k_hi + 1):
            Bk = live & (cover[k] > half) & (cover[k + 1] <= half)
            if not Bk.any():
                continue
            om = S > 2.0 ** k
            tilde = enlarged_set(product, om, ctilde, enlargement, fam)
            mu_t = float(product.mass[tilde].sum())
            lam = float(np.sqrt(energy[Bk].sum() * mu_t))
            rects = [tuple(map(int, r)) for r in np.argwhere(Bk)]
            sel = Bk[F1.func_cube][:, F2.func_cube]
            coeff = np.where(sel, C, 0.0) / lam
            values = F1.H.T @ coeff @ F2.H
            maxr, A1, A2 = maximal_rectangles(product, tilde)
            pieces = []
            assigned = {}
            for (j1, j2) in rects:
                rmask1, rmask2 = F1.A[j1], F2.A[j2]
                home = None
                for p, (i1, i2) in enumerate(maxr):
                    if not np.any(rmask1 & ~A1[i1]) and not np.any(rmask2 & ~A2[i2]):
                        home = p
                        break
                if home is None:
                    support_failures += 1
                    home = -1
                assigned.setdefault(home, []).append((j1, j2))
            for home, members in sorted(assigned.items()):
                msel = np.zeros_like(sel)
                for (j1, j2) in members:
                    msel |= np.outer(F1.func_cube == j1, F2.func_cube == j2)
                pv = F1.H.T @ np.where(msel, C, 0.0) @ F2.H / lam
                if home >= 0:
                    i1, i2 = maxr[home]
                    mask = np.outer(A1[i1], A2[i2])
                    rect = (i1, i2)
                else:
                    mask = np.zeros(product.shape, bool)
                    for (j1, j2) in members:
                        mask |= product.rect_mask(j1, j2)
                    rect = None
                pieces.append(AtomPiece(rect, mask, pv, members))
            atoms.append(Atom(k, lam, tilde, values, pieces, rects))
    recon = sum((a.lam * a.values for a in atoms), np.zeros(product.shape))
    target = projection(product, tensor)
    err = float(np.abs(recon - target).max()) if target.size else 0.0
    lam_sum = float(sum(abs(a.lam) for a in atoms))
    return AtomicDecomposition(atoms, err, lam_sum, norm, lam_sum / norm if norm > 0 else 0.0,
                               enlargement, ctilde, support_failures)


def validate_atom(product: ProductGrid, atom: Atom, tol: float = 1e-10) -> dict:
    """Support, size, localisation, cancellation and piece-size checks."""
    m1, m2 = product.f1.mass, product.f2.mass
    pos = np.outer(m1 > 0, m2 > 0)
    omega = np.asarray(atom.omega, bool)
    mu = float(product.mass[omega].sum())
    a = np.asarray(atom.values, float)
    scale = max(1.0, float(np.abs(a).max()) if a.size else 0.0)
    checks = {}

    def record(name, ok, witness=None):
        checks[name] = {"pass": bool(ok), "witness": witness}

    bad = np.argwhere((np.abs(a) > tol * scale) & ~omega & pos)
    record("support", bad.size == 0, bad[0].tolist() if bad.size else None)
    l2 = float(np.sqrt((a ** 2 * product.mass).sum()))
    bound = mu ** -0.5 if mu > 0 else (0.0 if l2 == 0 else np.inf)
    record("l2_size", (l2 == 0) or l2 <= bound * (1 + tol), {"norm": l2, "bound": bound})
    loc, canc, total, size = None, None, np.zeros_like(a), 0.0
    for j, piece in enumerate(atom.pieces):
        v = np.asarray(piece.values, float)
        total = total + v
        size += float((v ** 2 * product.mass).sum())
        bad = np.argwhere((np.abs(v) > tol * scale) & ~piece.mask & pos)
        if loc is None and bad.size:
            loc = {"piece": j, "point": bad[0].tolist()}
        col = m1 @ v
        row = v @ m2
        bx2 = np.flatnonzero((np.abs(col) > tol * scale) & (m2 > 0))
        bx1 = np.flatnonzero((np.abs(row) > tol * scale) & (m1 > 0))
        if canc is None and (bx2.size or bx1.size):
            canc = {"piece": j, "x2": bx2[:1].tolist(), "x1": bx1[:1].tolist()}
    record("localization", loc is None, loc)
    record("cancellation", canc is None, canc)
    sbound = 1.0 / mu if mu > 0 else (0.0 if size == 0 else np.inf)
    record("piece_size", size == 0 or size <= sbound * (1 + tol), {"sum": size, "bound": sbound})
    rec = float(np.abs(total - a).max()) if a.size else 0.0
    record("pieces_sum", rec <= tol * scale, {"error": rec})
    return {"pass": all(c["pass"] for c in checks.values()), "checks": checks}


def _containing_cube_mass(grids, ball):
    """Smallest-mass cube over all systems and levels that contains ``ball``
    (a boolean point mask); returns ``(mass, t, level_index, alpha)``."""
    best = None
    for t, g in enumerate(grids):
        m = g.measure.mass
        b = np.flatnonzero(ball)
        for i in range(g.nlevels):
            labs = np.unique(g.labels[i][b])
            if labs.size != 1:
                continue
            mass = float(m[g.labels[i] == labs[0]].sum())
            if best is None or mass < best[0]:
                best = (mass, t, i, int(labs[0]))
    return best


def structure_check(grids1, grids2, f, ctilde=0.25, enlargement="strong", cbar=1.0) -> dict:
    """Split a reference-system decomposition among all system pairs and
    evaluate the BMO-type functional in every pair."""
    bases1 = [build_basis(g) for g in grids1]
    bases2 = [build_basis(g) for g in grids2]
    ref = ProductGrid(bases1[0], bases2[0])
    f = ref.check(f)
    dec = atomic_decompose(ref, f, ctilde, enlargement)
    A1, A2 = cube_family(grids1[0]), cube_family(grids2[0])
    g1, g2 = grids1[0], grids2[0]
    parts = {}
    unassignable = []
    cache = {}

    def dilate(grid, A, row):
        members = np.flatnonzero(A[row])
        # the cube's centre and level: the finest level whose cube equals it
        for i in range(grid.nlevels - 1, -1, -1):
            lab = grid.labels[i][members[0]]
            if np.array_equal(np.flatnonzero(grid.labels[i] == lab), members):
                x = int(grid.centers[i][lab])
                r = cbar * grid.C1 * grid.delta ** (grid.kmin + i)
                return grid.space.dist[x] < r
        raise AssertionError("cube not found in its own grid")

    for atom in dec.atoms:
        for piece in atom.pieces:
            if piece.rect is None:
                unassignable.append({"k": atom.k, "reason": "no maximal rectangle"})
                continue
            i1, i2 = piece.rect
            if ("1", i1) not in cache:
                cache[("1", i1)] = _containing_cube_mass(grids1, dilate(g1, A1, i1))
            if ("2", i2) not in cache:
                cache[("2", i2)] = _containing_cube_mass(grids2, dilate(g2, A2, i2))
            c1, c2 = cache[("1", i1)], cache[("2", i2)]
            if c1 is None or c2 is None:
                unassignable.append({"k": atom.k, "rect": [i1, i2]})
                continue
            key = (c1[1], c2[1])
            parts[key] = parts.get(key, 0) + atom.lam * piece.values
    norms = {}
    total = np.zeros(ref.shape)
    for (t1, t2), v in sorted(parts.items()):
        P = ProductGrid(bases1[t1], bases2[t2])
        norms[f"{t1},{t2}"] = h1dd_norm(P, v)
        total = total + v
    cancel = projection(ref, product_analyze(ref, f))
    bmo = {}
    for t1, b1 in enumerate(bases1):
        for t2, b2 in enumerate(bases2):
            P = ProductGrid(b1, b2)
            bmo[f"{t1},{t2}"] = bmodd_functional(P, product_analyze(P, f))["value"]
    vals = list(bmo.values())
    return {
        "reference_h1": dec.h1_norm,
        "lambda_sum": dec.lambda_sum,
        "part_norms": norms,
        "part_norm_sum": float(sum(norms.values())),
        "reconstruction_error": float(np.abs(total - cancel).max()),
        "unassignable": unassignable,
        "bmo": bmo,
        "bmo_max": float(max(vals)),
        "bmo_min": float(min(vals)),
        "atoms": len(dec.atoms),
    }
