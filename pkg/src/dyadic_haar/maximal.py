"""Maximal functions over balls, dyadic cubes and their products.

All suprema are exact: a ball centred at ``c`` is a prefix of the points
sorted by distance from ``c``, so every ball average is read off a
cumulative sum.  A point ``y`` lies in exactly the balls whose prefix
reaches its position, hence a reversed running maximum over prefixes gives
the supremum over balls centred at ``c`` that contain ``y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import DyadicGrid, sandwich_balls, sandwich_search
from .space import BallIndex, doubling_ratio


def _as_columns(f):
    f = np.abs(np.asarray(f, dtype=float))
    return (f[:, None], True) if f.ndim == 1 else (f, False)


def hl_maximal(space, measure, f, index: BallIndex | None = None) -> np.ndarray:
    """Supremum of ``|f|`` averages over balls of positive mass containing
    each point.  ``f`` may hold several signals as columns."""
    F, single = _as_columns(f)
    index = index or BallIndex(space)
    m = measure.mass
    out = np.full(F.shape, -np.inf)
    for c in range(space.n):
        o = index.order[c]
        mass = np.cumsum(m[o])
        tot = np.cumsum(F[o] * m[o, None], axis=0)
        ok = index.is_end[c] & (mass > 0)
        avg = np.full(F.shape, -np.inf)
        avg[ok] = tot[ok] / mass[ok, None]
        suffix = np.maximum.accumulate(avg[::-1], axis=0)[::-1]
        out[o] = np.maximum(out[o], suffix)
    out[~np.isfinite(out)] = 0.0
    return out[:, 0] if single else out


def cube_indicator(grid: DyadicGrid, i: int):
    lab = grid.labels[i]
    nc = len(grid.centers[i])
    return sp.csr_matrix((np.ones(lab.size), (lab, np.arange(lab.size))), shape=(nc, lab.size))


def dyadic_maximal(grid: DyadicGrid, measure, f) -> np.ndarray:
    """Supremum of ``|f|`` averages over dyadic cubes of positive mass
    containing each point (one cube per level)."""
    F, single = _as_columns(f)
    m = measure.mass
    out = np.full(F.shape, -np.inf)
    for i in range(grid.nlevels):
        S = cube_indicator(grid, i)
        mass = S @ m
        tot = S @ (F * m[:, None])
        avg = np.full(tot.shape, -np.inf)
        avg[mass > 0] = tot[mass > 0] / mass[mass > 0, None]
        out = np.maximum(out, avg[grid.labels[i]])
    out[~np.isfinite(out)] = 0.0
    return out[:, 0] if single else out


def ball_family(space, measure, index: BallIndex | None = None) -> np.ndarray:
    """Distinct balls of positive mass as a boolean membership matrix."""
    index = index or BallIndex(space)
    c, L, _, _ = index.ball_list()
    A = index.membership(c, L)
    A = np.unique(A, axis=0)
    return A[(A.astype(float) @ measure.mass) > 0]


def cube_family(grid: DyadicGrid) -> np.ndarray:
    """Distinct dyadic cubes of positive mass (all levels) as a membership matrix."""
    rows = []
    for i in range(grid.nlevels):
        rows.append(grid.labels[i][None, :] == np.arange(len(grid.centers[i]))[:, None])
    A = np.unique(np.vstack(rows), axis=0)
    return A[(A.astype(float) @ grid.measure.mass) > 0]


def rectangle_maximal(A1, m1, A2, m2, f) -> np.ndarray:
    """Supremum of ``|f|`` averages over products of member sets.

    ``A1`` and ``A2`` are boolean membership matrices of the two families
    (rows are sets of positive mass).
    """
    F = np.abs(np.asarray(f, float))
    N1 = A1 * m1 / (A1.astype(float) @ m1)[:, None]
    N2 = A2 * m2 / (A2.astype(float) @ m2)[:, None]
    avg = N1 @ F @ N2.T
    n1, n2 = F.shape
    tmp = np.empty((n1, A2.shape[0]))
    for x1 in range(n1):
        tmp[x1] = avg[A1[:, x1]].max(axis=0)
    out = np.empty((n1, n2))
    for x2 in range(n2):
        out[:, x2] = tmp[:, A2[:, x2]].max(axis=1)
    return out


def strong_maximal(space1, measure1, space2, measure2, f) -> np.ndarray:
    f = np.asarray(f, float)
    if f.shape != (space1.n, space2.n):
        raise ValueError(f"signal shape {f.shape} does not match {(space1.n, space2.n)}")
    return rectangle_maximal(ball_family(space1, measure1), measure1.mass,
                             ball_family(space2, measure2), measure2.mass, f)


def dyadic_strong_maximal(grid1, grid2, f) -> np.ndarray:
    f = np.asarray(f, float)
    if f.shape != (grid1.space.n, grid2.space.n):
        raise ValueError(f"signal shape {f.shape} does not match the grids")
    return rectangle_maximal(cube_family(grid1), grid1.measure.mass,
                             cube_family(grid2), grid2.measure.mass, f)


def forward_constant(C_dbl: float, c1: float, C1: float) -> float:
    """``C_dbl ** (log2(C1 / c1) + 1)``: bounds each dyadic maximal function
    by the ball maximal function when the measure is doubling."""
    return float(C_dbl ** (math.log2(C1 / c1) + 1.0))


@dataclass
class MaximalReport:
    M: np.ndarray
    Md: list
    forward_ratio: list
    C_star: list
    forward_ok: bool
    reverse_ratio: float
    C_prime: float
    C_prime_proof: float
    reverse_ok: bool
    C_dbl: float
    sandwich_rate: float
    extra: dict = field(default_factory=dict)


def ball_lengths(index: BallIndex, centers, radii) -> np.ndarray:
    """Prefix length of ``B(c, r)`` for each (centre, radius) pair."""
    L = np.empty(len(centers), dtype=int)
    for c in np.unique(centers):
        sel = centers == c
        L[sel] = np.searchsorted(index.sorted_dist[c], radii[sel], "left")
    return L


def sandwich_mass_ratios(grids, space, measure, index: BallIndex | None = None):
    """For each sandwiched test ball of positive mass, the ratio
    ``mu(Q) / mu(B)`` for its best sandwiching cube, plus the ball data."""
    index = index or BallIndex(space)
    centers, radii = sandwich_balls(space)
    C, t, lev, ok = sandwich_search(grids, space, centers, radii)
    m = measure.mass
    L = ball_lengths(index, centers, radii)
    ball_mass = index.prefix_sums(m)[centers, L - 1]
    qmass = np.full(len(radii), np.nan)
    for s, g in enumerate(grids):
        for i in np.unique(lev[ok & (t == s)]):
            sel = ok & (t == s) & (lev == i)
            if i < 0:
                qmass[sel] = m.sum()
            elif i >= g.nlevels:
                qmass[sel] = m[centers[sel]]
            else:
                qmass[sel] = g.masses(g.kmin + i)[g.labels[i][centers[sel]]]
    use = ok & (ball_mass > 0)
    return {"centers": centers[use], "lengths": L[use], "ratio": qmass[use] / ball_mass[use],
            "C": C[use], "rate": float(ok.mean()) if ok.size else 1.0}


def restricted_maximal(index: BallIndex, measure, F, centers, lengths) -> np.ndarray:
    """Supremum of ``|F|`` averages over the listed prefix balls only."""
    m = measure.mass
    out = np.zeros(F.shape)
    for c in np.unique(centers):
        Ls = lengths[centers == c]
        o = index.order[c]
        mass = np.cumsum(m[o])
        tot = np.cumsum(F[o] * m[o, None], axis=0)
        avg = np.full(F.shape, -np.inf)
        avg[Ls - 1] = tot[Ls - 1] / mass[Ls - 1, None]
        suffix = np.maximum.accumulate(avg[::-1], axis=0)[::-1]
        out[o] = np.maximum(out[o], suffix)
    return out


def compare_maximal(grids, space, measure, f, C_dbl: float | None = None) -> MaximalReport:
    """Pointwise comparison of the ball and dyadic maximal functions.

    Forward: ``M_d^t f <= C* M f`` with ``C*`` from the measured doubling
    constant and grid constants.  Reverse: on balls sandwiched by some cube
    ``Q``, the ball average is at most ``mu(Q)/mu(B)`` times a dyadic average,
    so the restricted maximal function is bounded by ``C' sum_t M_d^t f``
    with ``C'`` the largest such mass ratio.
    """
    F, single = _as_columns(f)
    grids = list(grids)
    index = BallIndex(space)
    if C_dbl is None:
        C_dbl = doubling_ratio(space, measure.mass, index)[0]
    M = hl_maximal(space, measure, F, index)
    Md = [dyadic_maximal(g, measure, F) for g in grids]
    tol = 1e-12
    fr, cs, fok = [], [], True
    pos = M > 0
    for g, md in zip(grids, Md):
        ratio = float(np.max(md[pos] / M[pos])) if pos.any() else 1.0
        if np.any(md[~pos] > 0):
            ratio = np.inf
        cstar = forward_constant(C_dbl, g.c1, g.C1)
        fr.append(ratio)
        cs.append(cstar)
        fok &= bool(np.all(md <= cstar * M * (1 + tol) + tol))
    total = np.sum(Md, axis=0)
    tpos = total > 0
    rev = float(np.max(M[tpos] / total[tpos])) if tpos.any() else 1.0
    sw = sandwich_mass_ratios(grids, space, measure, index)
    C_prime = float(sw["ratio"].max()) if sw["ratio"].size else np.nan
    Msw = restricted_maximal(index, measure, F, sw["centers"], sw["lengths"])
    rok = bool(np.all(Msw <= C_prime * total * (1 + tol) + tol)) if np.isfinite(C_prime) else False
    C_sand = float(sw["C"].max()) if sw["C"].size else np.nan
    C_proof = float(C_dbl ** (1 + math.log2(C_sand))) if np.isfinite(C_sand) else np.nan
    sq = (lambda a: a[:, 0]) if single else (lambda a: a)
    return MaximalReport(sq(M), [sq(x) for x in Md], fr, cs, fok, rev, C_prime, C_proof,
                         rok, float(C_dbl), sw["rate"], {"C_sandwich": C_sand})
